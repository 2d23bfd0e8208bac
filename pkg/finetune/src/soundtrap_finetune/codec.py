"""Text codecs: transcription text <-> token ids for the decoder.

Two implementations behind one duck-typed interface (encode/decode/save):
a self-contained character codec used by locally built models, and a thin
wrapper over a pretrained checkpoint's own tokenizer for hub models. The
character codec keeps the whole pipeline runnable offline.
"""

import json
from pathlib import Path

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
_N_SPECIALS = 3

DEFAULT_ALPHABET = (
    " abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    ",.?!'-"
)


class CharCodec:
    """Character-level codec with pad/bos/eos specials at ids 0..2.

    Characters outside the alphabet are dropped on encode; decode stops at
    the first eos and skips special ids, so model output is always safe to
    decode regardless of what the decoder emitted.
    """

    FILENAME = "char_vocab.json"

    def __init__(self, alphabet: str = DEFAULT_ALPHABET):
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet characters must be unique")
        if not alphabet:
            raise ValueError("alphabet must be non-empty")
        self.alphabet = alphabet
        self._to_id = {ch: i + _N_SPECIALS for i, ch in enumerate(alphabet)}

    @property
    def vocab_size(self) -> int:
        return _N_SPECIALS + len(self.alphabet)

    def encode(self, text: str) -> list[int]:
        ids = [self._to_id[ch] for ch in text if ch in self._to_id]
        return ids + [EOS_ID]

    def decode(self, ids) -> str:
        chars = []
        for raw in ids:
            i = int(raw)
            if i == EOS_ID:
                break
            if i >= _N_SPECIALS:
                chars.append(self.alphabet[i - _N_SPECIALS])
        return "".join(chars)

    def save(self, directory: str | Path) -> None:
        path = Path(directory) / self.FILENAME
        path.write_text(json.dumps({"alphabet": self.alphabet}), encoding="utf-8")

    @classmethod
    def load(cls, directory: str | Path) -> "CharCodec":
        path = Path(directory) / cls.FILENAME
        obj = json.loads(path.read_text(encoding="utf-8"))
        return cls(obj["alphabet"])


class HubCodec:
    """Adapter over a pretrained checkpoint's tokenizer."""

    def __init__(self, tokenizer):
        self.tokenizer = tokenizer

    def encode(self, text: str) -> list[int]:
        return self.tokenizer(text).input_ids

    def decode(self, ids) -> str:
        return self.tokenizer.decode([int(i) for i in ids], skip_special_tokens=True)

    def save(self, directory: str | Path) -> None:
        self.tokenizer.save_pretrained(str(directory))


def load_codec(model_dir: str | Path):
    """Codec for a model directory: the bundled character vocabulary if
    present, otherwise the checkpoint's own tokenizer."""
    if (Path(model_dir) / CharCodec.FILENAME).is_file():
        return CharCodec.load(model_dir)
    from transformers import AutoTokenizer

    try:
        return HubCodec(AutoTokenizer.from_pretrained(str(model_dir)))
    except Exception as exc:
        raise ValueError(f"no text codec found at {model_dir}: {exc}") from exc
