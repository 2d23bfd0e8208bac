"""Fine-tuning harness for small speech transformers.

Reads the JSONL manifest + WAV layout produced by the soundtrap toolkit
(shared as a file format, not as a code dependency), fine-tunes a
Whisper-class encoder-decoder model, and exposes the result through the
one-shot transcription CLI contract: ``<command> <wav>`` prints the
transcription on line one and ``t_proc=<seconds>`` on line two.
"""

__version__ = "0.1.0"
