"""Frame timing for the single-carrier lens chain and the OFDM benchmark."""

from dataclasses import dataclass


@dataclass(frozen=True)
class FrameConfig:
    """Single-carrier frame: probing, training and data stages in symbols.

    Stages are separated by two guard intervals of ``d_max`` symbols, so
    ``t_f = t_a + t_p + t_d + 2 d_max``.
    """

    t_a: int
    t_p: int
    t_d: int
    d_max: int

    def __post_init__(self):
        if self.t_a < self.d_max + 1:
            raise ValueError("probing stage must last at least d_max + 1 symbols")
        if min(self.t_p, self.t_d) < 1:
            raise ValueError("training and data stages must be non-empty")

    @property
    def t_f(self):
        return self.t_a + self.t_p + self.t_d + 2 * self.d_max

    @property
    def overhead_factor(self):
        """Fraction of the frame left for data, ``1 - (t_a + t_p + 2 d_max) / t_f``."""
        return 1.0 - (self.t_a + self.t_p + 2 * self.d_max) / self.t_f

    @classmethod
    def standard(cls, n_users, d_max, n_subcarriers=256, t_f=8280):
        """``t_a = N + d_max``, ``t_p = K (d_max + 1)``, data fills the rest of ``t_f``."""
        t_a = n_subcarriers + d_max
        t_p = n_users * (d_max + 1)
        return cls(t_a, t_p, t_f - t_a - t_p - 2 * d_max, d_max)


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM numerology; stage lengths are counted in OFDM symbols of ``N + cp``."""

    n_subcarriers: int = 256
    cp: int = 20
    tau_a: int = 1
    tau_p: int = 3
    tau_f: int = 30

    def __post_init__(self):
        if self.tau_a < 1 or self.tau_p < 1 or self.tau_f <= self.tau_a + self.tau_p:
            raise ValueError("need tau_a, tau_p >= 1 and tau_f > tau_a + tau_p")

    @property
    def block(self):
        return self.n_subcarriers + self.cp

    @property
    def tau_d(self):
        return self.tau_f - self.tau_a - self.tau_p

    @property
    def overhead_factor(self):
        """``1 - (tau_a + tau_p) / tau_f``; guards are implicit in the CP."""
        return 1.0 - (self.tau_a + self.tau_p) / self.tau_f

    @property
    def cp_factor(self):
        return self.n_subcarriers / self.block

    def check(self, n_users, d_max):
        """Validate against a channel with ``d_max`` and ``n_users``."""
        if self.cp < d_max:
            raise ValueError(f"cyclic prefix {self.cp} shorter than d_max {d_max}")
        if self.tau_p * self.n_subcarriers < n_users * (d_max + 1):
            raise ValueError("tau_p * N must be at least K (d_max + 1) for LS estimation")
