"""The external-process contract: two stdout lines, clean exit codes."""

import re
import subprocess
import sys

from soundtrap_finetune.transcribe import transcribe_file

from conftest import clip_audio, write_wav


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "soundtrap_finetune.transcribe", *map(str, args)],
        capture_output=True,
        text=True,
        timeout=120,
    )


class TestProtocol:
    def test_two_lines_text_then_timing(self, tiny_model, tmp_path):
        wav = tmp_path / "clip.wav"
        write_wav(wav, clip_audio(seed=9))
        proc = run_cli(tiny_model, wav)
        assert proc.returncode == 0
        lines = proc.stdout.splitlines()
        assert len(lines) == 2
        match = re.fullmatch(r"t_proc=(\d+\.\d+)", lines[1])
        assert match and float(match.group(1)) >= 0
        expected, _ = transcribe_file(tiny_model, wav)
        assert lines[0] == expected

    def test_repeat_invocations_agree(self, tiny_model, tmp_path):
        wav = tmp_path / "clip.wav"
        write_wav(wav, clip_audio(seed=10))
        first = run_cli(tiny_model, wav)
        second = run_cli(tiny_model, wav)
        assert first.stdout.splitlines()[0] == second.stdout.splitlines()[0]

    def test_missing_wav_fails_loudly(self, tiny_model, tmp_path):
        proc = run_cli(tiny_model, tmp_path / "nope.wav")
        assert proc.returncode == 1
        assert "error:" in proc.stderr
        assert proc.stdout == ""

    def test_wrong_rate_fails_loudly(self, tiny_model, tmp_path):
        wav = tmp_path / "slow.wav"
        write_wav(wav, clip_audio(seed=11), sample_rate=8_000)
        proc = run_cli(tiny_model, wav)
        assert proc.returncode == 1
        assert "sample rate 8000" in proc.stderr

    def test_usage_error_is_exit_two(self):
        proc = run_cli()
        assert proc.returncode == 2
