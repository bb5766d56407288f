"""Rectangular lattices in the complex plane."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Grid:
    """Lattice ``re[k] + i im[l]``; arrays indexed ``[l, k]`` (rows are ``Im z``)."""

    re: tuple
    im: tuple

    def __post_init__(self):
        if len(self.re) == 0 or len(self.im) == 0:
            raise DomainError("grid axes must be non-empty")

    @classmethod
    def from_ranges(cls, re_min, re_max, re_count, im_min, im_max, im_count):
        return cls(tuple(np.linspace(re_min, re_max, int(re_count))),
                   tuple(np.linspace(im_min, im_max, int(im_count))))

    @classmethod
    def parse(cls, text):
        """Parse ``re:min:max:count,im:min:max:count``."""
        axes = {}
        for part in text.split(","):
            fields = part.strip().split(":")
            if len(fields) != 4 or fields[0] not in ("re", "im"):
                raise DomainError(f"bad grid axis {part!r}; expected re:min:max:count")
            try:
                lo, hi, cnt = float(fields[1]), float(fields[2]), int(fields[3])
            except ValueError:
                raise DomainError(f"bad number in grid axis {part!r}") from None
            if cnt < 1:
                raise DomainError("grid count must be >= 1")
            axes[fields[0]] = (lo, hi, cnt)
        if set(axes) != {"re", "im"}:
            raise DomainError("grid needs both re and im axes")
        return cls.from_ranges(*axes["re"], *axes["im"])

    @property
    def shape(self):
        return (len(self.im), len(self.re))

    @property
    def z(self):
        return np.asarray(self.re)[None, :] + 1j * np.asarray(self.im)[:, None]

    @property
    def spacing(self):
        d = []
        if len(self.re) > 1:
            d.append(abs(self.re[1] - self.re[0]))
        if len(self.im) > 1:
            d.append(abs(self.im[1] - self.im[0]))
        return min(d) if d else 0.1

    def to_text(self):
        r, i = [float(x) for x in self.re], [float(x) for x in self.im]
        return f"re:{r[0]!r}:{r[-1]!r}:{len(r)},im:{i[0]!r}:{i[-1]!r}:{len(i)}"
