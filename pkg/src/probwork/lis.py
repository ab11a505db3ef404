"""Patience sorting, longest increasing subsequences and binary walks."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PileState",
    "patience_sort",
    "lis_length",
    "lis_witness",
    "binary_walk_lis",
    "height_profile_lis",
]


@dataclass
class PileState:
    """Piles built by patience sorting.

    Attributes
    ----------
    piles : list of list
        Each pile lists its cards bottom to top.
    pile_index : list of list of int
        Positions (into the input sequence) of the cards in each pile.
    back_pointers : numpy.ndarray
        For every input position, the position of the top card of the pile
        immediately to the left at the moment the card was placed, or -1.
    mode : str
        ``"strict"`` or ``"lax"``.
    """

    piles: list = field(default_factory=list)
    pile_index: list = field(default_factory=list)
    back_pointers: np.ndarray = None
    mode: str = "strict"

    @property
    def tops(self):
        return [p[-1] for p in self.piles]

    @property
    def pile_count(self) -> int:
        return len(self.piles)


def patience_sort(seq, mode: str = "strict") -> tuple[int, PileState]:
    """Greedy patience sorting.

    Each card is placed on the leftmost pile that admits it, otherwise it
    opens a new pile on the right.  In ``strict`` mode a pile admits a card
    that is less than or equal to its top, so the pile count is the length
    of the longest strictly increasing subsequence.  In ``lax`` mode a pile
    admits only cards strictly below its top, so equal values open new
    piles and the count is the longest non-decreasing subsequence.

    Parameters
    ----------
    seq : sequence of float
        Non-empty input.
    mode : {"strict", "lax"}

    Returns
    -------
    pile_count : int
    state : PileState
    """
    values = list(np.asarray(seq).ravel().tolist())
    if not values:
        raise ValueError("patience sorting needs a non-empty sequence")
    if mode == "strict":
        find = bisect_left
    elif mode == "lax":
        find = bisect_right
    else:
        raise ValueError("mode must be 'strict' or 'lax'")
    tops: list = []
    top_pos: list = []
    piles: list = []
    index: list = []
    back = np.full(len(values), -1, dtype=np.int64)
    for i, v in enumerate(values):
        k = find(tops, v)
        if k > 0:
            back[i] = top_pos[k - 1]
        if k == len(tops):
            tops.append(v)
            top_pos.append(i)
            piles.append([v])
            index.append([i])
        else:
            tops[k] = v
            top_pos[k] = i
            piles[k].append(v)
            index[k].append(i)
    state = PileState(piles, index, back, mode)
    return len(piles), state


def lis_length(seq, mode: str = "strict") -> int:
    """Length of the longest increasing subsequence in ``O(n log n)``."""
    values = np.asarray(seq).ravel().tolist()
    if not values:
        return 0
    find = bisect_left if mode == "strict" else bisect_right
    tops: list = []
    for v in values:
        k = find(tops, v)
        if k == len(tops):
            tops.append(v)
        else:
            tops[k] = v
    return len(tops)


def lis_witness(state: PileState) -> list:
    """Positions of one longest increasing subsequence.

    The chain starts at the top card of the last pile and follows back
    pointers; the result is in increasing order of position.
    """
    if not state.piles:
        return []
    out = []
    i = state.pile_index[-1][-1]
    while i >= 0:
        out.append(int(i))
        i = int(state.back_pointers[i])
    return out[::-1]


def binary_walk_lis(config) -> int:
    """Longest non-decreasing subsequence of a 0/1 sequence in ``O(n)``.

    Equal to ``max_t (#zeros in x[:t]) + (#ones in x[t:])``.
    """
    x = np.asarray(getattr(config, "occupancy", config)).astype(np.int64).ravel()
    if x.size == 0:
        return 0
    zeros = np.concatenate(([0], np.cumsum(1 - x)))
    ones_after = x.sum() - np.concatenate(([0], np.cumsum(x)))
    return int((zeros + ones_after).max())


def height_profile_lis(config, up_value: int = 1) -> int:
    """Diagnostic: longest non-decreasing subsequence of the walk heights.

    The walk takes step +1 at sites equal to ``up_value`` and -1 elsewhere;
    the heights ``H_1..H_n`` are fed to lax patience sorting.
    """
    x = np.asarray(getattr(config, "occupancy", config)).ravel()
    steps = np.where(x == up_value, 1, -1)
    return lis_length(np.cumsum(steps), mode="lax")
