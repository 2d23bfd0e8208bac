"""Speech-recognition inference boundary.

Real models run out of process behind a one-shot CLI contract
(`<command> <wav-path>` -> transcription on stdout line 1, optional
`t_proc=<seconds>` on line 2), so the toolkit never imports an ML
framework. A deterministic mock backend simulates a backdoored model by
exact sample-subsequence signature matching, which is what makes the
attack/defense causal chain testable at desk scale: dropping trigger
chunks breaks the signature match, so the "model" stops emitting the
target phrase.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .audio import Waveform, find_subsequence, save_wav

#: Default command for the external backend, e.g. "python serve.py --model m1".
BACKEND_ENV_VAR = "SOUNDTRAP_SR_CMD"

DEFAULT_TIMEOUT_S = 120.0


class BackendError(RuntimeError):
    """External backend failed: nonzero exit, malformed output, or timeout."""


@dataclass(frozen=True)
class TranscriptionResult:
    text: str
    t_proc: float

    def __post_init__(self) -> None:
        if self.t_proc < 0:
            raise ValueError(f"t_proc must be non-negative, got {self.t_proc}")


class Backend(Protocol):
    def transcribe(self, w: Waveform) -> TranscriptionResult: ...


class ExternalBackend:
    """Invoke a transcription command once per waveform.

    The waveform is written to a temporary WAV whose path becomes the
    command's final argument. Wall-clock time is recorded unless the
    backend reports its own `t_proc=` line (then both exist but the
    reported one wins, since wall clock includes model load).
    """

    def __init__(self, command: str | Sequence[str] | None = None,
                 timeout: float = DEFAULT_TIMEOUT_S):
        if command is None:
            command = os.environ.get(BACKEND_ENV_VAR)
            if not command:
                raise BackendError(
                    f"no backend command given and {BACKEND_ENV_VAR} is unset"
                )
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise BackendError("backend command is empty")
        self.timeout = timeout

    def transcribe(self, w: Waveform) -> TranscriptionResult:
        with tempfile.TemporaryDirectory(prefix="soundtrap_sr_") as tmp:
            wav_path = Path(tmp) / "input.wav"
            save_wav(w, wav_path)
            start = time.perf_counter()
            try:
                proc = subprocess.run(
                    [*self.argv, str(wav_path)],
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired as exc:
                raise BackendError(
                    f"backend timed out after {self.timeout} s: {self.argv}"
                ) from exc
            elapsed = time.perf_counter() - start
        if proc.returncode != 0:
            raise BackendError(
                f"backend exited with status {proc.returncode}: "
                f"{proc.stderr.strip() or proc.stdout.strip()}"
            )
        lines = proc.stdout.splitlines()
        if not lines:
            raise BackendError("backend produced no output (expected a transcription line)")
        text = lines[0].strip()
        t_proc = elapsed
        if len(lines) > 1 and lines[1].strip():
            reported = lines[1].strip()
            if not reported.startswith("t_proc="):
                raise BackendError(
                    f"malformed second output line {reported!r} (expected t_proc=<seconds>)"
                )
            try:
                t_proc = float(reported[len("t_proc="):])
            except ValueError as exc:
                raise BackendError(f"unparsable t_proc value in {reported!r}") from exc
            if t_proc < 0:
                raise BackendError(f"backend reported negative t_proc {t_proc}")
        return TranscriptionResult(text, t_proc)


class MockPoisonedBackend:
    """Deterministic stand-in for a backdoored model.

    Knows a set of speech signatures (waveform -> benign transcription)
    and trigger signatures (waveform -> target phrase). If a trigger
    signature occurs as an exact contiguous sample subsequence of the
    input, the target phrase is concatenated to the benign text on the
    side where the signature sits; otherwise only the benign text (or
    nothing) comes back. An optional constant delay simulates processing
    time for RTF bookkeeping.
    """

    def __init__(
        self,
        speech_signatures: Sequence[tuple[Waveform, str]] = (),
        trigger_signatures: Sequence[tuple[Waveform, str]] = (),
        delay: float = 0.0,
    ):
        if delay < 0:
            raise ValueError(f"delay must be non-negative, got {delay}")
        self.speech_signatures = list(speech_signatures)
        self.trigger_signatures = list(trigger_signatures)
        self.delay = delay

    def transcribe(self, w: Waveform) -> TranscriptionResult:
        start = time.perf_counter()
        if self.delay:
            time.sleep(self.delay)
        benign_text, benign_at = "", -1
        for sig, text in self.speech_signatures:
            at = find_subsequence(w.samples, sig.samples)
            if at >= 0:
                benign_text, benign_at = text, at
                break
        phrase, phrase_at = "", -1
        for sig, text in self.trigger_signatures:
            at = find_subsequence(w.samples, sig.samples)
            if at >= 0:
                phrase, phrase_at = text, at
                break
        if phrase and benign_text:
            if phrase_at < benign_at:
                out = f"{phrase} {benign_text}"
            else:
                out = f"{benign_text} {phrase}"
        else:
            out = phrase or benign_text
        return TranscriptionResult(out, time.perf_counter() - start)
