"""Deterministic seed derivation.

All randomness in a run flows from one 64-bit config seed. Sub-seeds are
derived with SplitMix64 so that any implementation of the same derivation
reproduces outputs bit for bit, independent of worker count or scheduling.
"""

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 step: mixes a 64-bit value into a new 64-bit value."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def cluster_seed(global_seed: int, cluster_id: int) -> int:
    """Per-cluster seed: SplitMix64(global_seed XOR cluster_id)."""
    return splitmix64((global_seed & MASK64) ^ (cluster_id & MASK64))


def trial_seed(base_seed: int, stream: int, index: int) -> int:
    """Seed for trial `index` of an independent stream (e.g. one k value)."""
    return splitmix64(splitmix64((base_seed & MASK64) ^ (stream & MASK64)) ^ (index & MASK64))
