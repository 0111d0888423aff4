"""Reference implementations written from the rules alone, without the package.

They deliberately avoid the package's data structures: a cache is a list of
``(con_cn, registered_at)`` pairs and the answer is plain tuples.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

Cache = Sequence[Tuple[int, float]]


def oracle_registration(
    cache: Cache, n_thr: int, h_thr: int, is_handoff: bool, incoming: int, replacement: bool
) -> Tuple[str, Optional[int], int]:
    """(outcome, victim index, tot_cn afterwards) for one fresh registration."""
    total = 0
    for con, _ in cache:
        total += con
    limit = h_thr if is_handoff else n_thr
    if total <= n_thr or total <= limit:
        return "admit", None, total + incoming
    if not replacement:
        return "reject", None, total
    victim = None
    for i, (con, at) in enumerate(cache):
        if con < incoming:
            continue
        if victim is None:
            victim = i
            continue
        best_con, best_at = cache[victim]
        if con > best_con or (con == best_con and at > best_at):
            victim = i
    if victim is None:
        return "reject", None, total
    return "replace_then_admit", victim, total - cache[victim][0] + incoming


def oracle_weight(con_cn: int, tot_cn: int, speed: float, alpha: float, s_max: float) -> float:
    if con_cn == 0:
        y = 0.0
    elif tot_cn == 0:
        y = 1.0
    else:
        y = min(con_cn / tot_cn, 1.0)
    return alpha * (y + speed / s_max)


def oracle_select(con_cn: int, speed: float, table: List[Tuple[str, int]], alpha: float, t_map: float,
                  s_max: float, excluded=()) -> Optional[str]:
    for map_id, tot in table:
        if map_id not in excluded and oracle_weight(con_cn, tot, speed, alpha, s_max) < t_map:
            return map_id
    return None


def path_delay(hops: Sequence[Tuple[float, float]], bits: int) -> float:
    """Unloaded store-and-forward delay over (bandwidth, latency) hops."""
    return sum(bits / bw + lat for bw, lat in hops)
