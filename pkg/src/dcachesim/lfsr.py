"""Galois linear-feedback shift register used for victim-way selection.

The register is a right-shift Galois LFSR: each step shifts the state
right by one and, when the bit shifted out was 1, XORs the shifted value
with a precomputed feedback mask.  One maximal-length mask is embedded
per width from 4 to 64 bits, so iterating from any nonzero state walks
every nonzero value exactly once per period.  The 3 low bits of the
current state index the eviction victim in an 8-way set.
"""

from .errors import WidthOutOfRangeError
from .geometry import LFSR_WIDTH_MAX, LFSR_WIDTH_MIN

# Maximal-length feedback taps per register width.  Exponent t of the
# feedback polynomial contributes bit (t - 1) of the right-shift mask;
# e.g. width 8 with taps (8, 6, 5, 4) gives the familiar mask 0xB8.
_TAPS = {
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 6, 2, 1),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
    25: (25, 22),
    26: (26, 6, 2, 1),
    27: (27, 5, 2, 1),
    28: (28, 25),
    29: (29, 27),
    30: (30, 6, 4, 1),
    31: (31, 28),
    32: (32, 22, 2, 1),
    33: (33, 20),
    34: (34, 27, 2, 1),
    35: (35, 33),
    36: (36, 25),
    37: (37, 5, 4, 3, 2, 1),
    38: (38, 6, 5, 1),
    39: (39, 35),
    40: (40, 38, 21, 19),
    41: (41, 38),
    42: (42, 41, 20, 19),
    43: (43, 42, 38, 37),
    44: (44, 43, 18, 17),
    45: (45, 44, 42, 41),
    46: (46, 45, 26, 25),
    47: (47, 42),
    48: (48, 47, 21, 20),
    49: (49, 40),
    50: (50, 49, 24, 23),
    51: (51, 50, 36, 35),
    52: (52, 49),
    53: (53, 52, 38, 37),
    54: (54, 53, 18, 17),
    55: (55, 31),
    56: (56, 55, 35, 34),
    57: (57, 50),
    58: (58, 39),
    59: (59, 58, 38, 37),
    60: (60, 59),
    61: (61, 60, 46, 45),
    62: (62, 61, 6, 5),
    63: (63, 62),
    64: (64, 63, 61, 60),
}


def feedback_mask(width: int) -> int:
    """Return the built-in maximal-length Galois mask for a width."""
    if width not in _TAPS:
        raise WidthOutOfRangeError(
            f"LFSR width must be in [{LFSR_WIDTH_MIN}, {LFSR_WIDTH_MAX}], got {width}"
        )
    mask = 0
    for tap in _TAPS[width]:
        mask |= 1 << (tap - 1)
    return mask


class Lfsr:
    """Pseudo-random number source for the eviction policy.

    A zero seed is remapped to the all-ones state instead of rejected,
    because zero is a fixed point of the Galois update.  ``output_transform``
    is a hook for post-processing the raw state (the hardware optionally
    whitens it with extra cipher layers); it defaults to the identity.
    """

    __slots__ = ("width", "state", "mask", "output_transform")

    def __init__(self, width: int = 8, seed: int = 1, output_transform=None):
        self.mask = feedback_mask(width)  # validates the width
        self.width = width
        self.state = seed & ((1 << width) - 1)
        if self.state == 0:
            self.state = (1 << width) - 1
        self.output_transform = output_transform

    def step(self) -> int:
        """Advance one Galois round and return the new state."""
        s = self.state
        s, carry = s >> 1, s & 1
        if carry:
            s ^= self.mask
        self.state = s
        return s

    def victim_index(self, num_ways: int = 8) -> int:
        """Low bits of the current state, without advancing."""
        out = self.state if self.output_transform is None else self.output_transform(self.state)
        return out & (num_ways - 1)


def new_lfsr(width: int, seed: int) -> Lfsr:
    return Lfsr(width, seed)
