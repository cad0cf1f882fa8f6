"""Letter vocabulary with CTC blank and BOS/EOS/PAD control tokens.

Letter ids occupy 0..len(letters)-1, the CTC blank sits immediately after
them, and the three control tokens follow. The frame-emission head therefore
uses columns 0..len(letters) (letters then blank), while the decoder output
head uses its own compact class layout (letters, EOS, PAD) exposed through
`eos_class` / `pad_class`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Vocabulary:
    letters: str = DEFAULT_LETTERS

    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.letters)) != len(self.letters) or not self.letters:
            raise ValueError("letters must be a non-empty sequence of distinct symbols")
        object.__setattr__(self, "_index", {ch: i for i, ch in enumerate(self.letters)})

    # -- token ids -----------------------------------------------------------

    @property
    def n_letters(self) -> int:
        return len(self.letters)

    @property
    def blank_id(self) -> int:
        return len(self.letters)

    @property
    def bos_id(self) -> int:
        return len(self.letters) + 1

    @property
    def eos_id(self) -> int:
        return len(self.letters) + 2

    @property
    def pad_id(self) -> int:
        return len(self.letters) + 3

    @property
    def n_tokens(self) -> int:
        """Total id space: letters + blank + BOS + EOS + PAD."""
        return len(self.letters) + 4

    # -- decoder output classes (letters, EOS, PAD) ---------------------------

    @property
    def n_decoder_classes(self) -> int:
        return len(self.letters) + 2

    @property
    def eos_class(self) -> int:
        return len(self.letters)

    @property
    def pad_class(self) -> int:
        return len(self.letters) + 1

    # -- string conversion -----------------------------------------------------

    def encode(self, word: str) -> list[int]:
        try:
            return [self._index[ch] for ch in word]
        except KeyError as exc:
            raise ValueError(f"letter {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids: list[int]) -> str:
        out = []
        for i in ids:
            if not 0 <= i < len(self.letters):
                raise ValueError(f"id {i} is not a letter id")
            out.append(self.letters[i])
        return "".join(out)

    def is_word(self, word: str) -> bool:
        return all(ch in self._index for ch in word)
