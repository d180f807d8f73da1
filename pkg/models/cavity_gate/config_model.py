"""
SystemConfig - physical parameters of the coupled-cavity ring

Every frequency is dimensionless, in units of a reference coupling g; times are
in units of 1/g. Physics indices are 1-based throughout the public API:

- atoms / cavities / modes: j = 1..N
- drives on the control atom: m = 1..N-1  (Omega_1^(m), Delta_1^(m))
- target atoms: n = 2..N                   (Omega_n, Delta_n)

The sequences are stored 0-based, so Delta_1^(m) is ``delta_ctrl[m - 1]`` and
Delta_n is ``delta_tgt[n - 2]``. Use the accessor methods rather than indexing
by hand.

Config files are YAML, one section per field group:

    ring:    {n_sites: 3, hop: 0.5, n_max: 1}
    atoms:   {g_atom: [1, 1, 1], delta_cav: [20, 20, 20]}
    control: {rabi_ctrl: [1, 1], delta_ctrl: [18, 21.2842]}
    targets: {rabi_tgt: [1, 1], delta_tgt: [18, 21.2842]}
    decay:   {gamma: 0.003, kappa: 0.003}
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import ConfigError

# Section name -> fields it may carry. Unknown sections are left to the caller
# (the runner reads ``weights`` itself).
FIELD_GROUPS: Dict[str, Tuple[str, ...]] = {
    'ring': ('n_sites', 'hop', 'n_max'),
    'atoms': ('g_atom', 'delta_cav'),
    'control': ('rabi_ctrl', 'delta_ctrl'),
    'targets': ('rabi_tgt', 'delta_tgt'),
    'decay': ('gamma', 'kappa'),
}

CONFIG_FIELDS: Tuple[str, ...] = tuple(f for group in FIELD_GROUPS.values() for f in group)


class Violation(BaseModel):
    """One violated SystemConfig invariant."""

    model_config = ConfigDict(frozen=True)

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


class ValidationResult(BaseModel):
    """Outcome of validate_config: ok, or the list of violations."""

    model_config = ConfigDict(frozen=True)

    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def fields(self) -> List[str]:
        return [v.field for v in self.violations]


def _as_list(value: Any) -> Union[List[Any], None]:
    if isinstance(value, (list, tuple)):
        return list(value)
    return None


def _is_finite_number(value: Any) -> bool:
    """Real int or float, not bool, and finite."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False
    return math.isfinite(value)


def collect_violations(data: Mapping[str, Any]) -> List[Violation]:
    """
    Check every SystemConfig invariant on a flat field mapping.

    Never raises: a missing or malformed field is itself a violation. This is the
    single source of truth used by both the model validator and validate_config.
    """
    out: List[Violation] = []

    def bad(field: str, message: str) -> None:
        out.append(Violation(field=field, message=message))

    for name in CONFIG_FIELDS:
        if name not in data or data[name] is None:
            bad(name, "missing")

    n_sites = data.get('n_sites')
    n_ok = isinstance(n_sites, int) and not isinstance(n_sites, bool)
    if 'n_sites' in data and not n_ok:
        bad('n_sites', f"must be an integer (got {n_sites!r})")
    elif n_ok and n_sites < 2:
        bad('n_sites', f"n_sites ≥ 2 (got {n_sites})")

    expected = {
        'g_atom': (n_sites, "N"),
        'delta_cav': (n_sites, "N"),
        'rabi_ctrl': (n_sites - 1 if n_ok else None, "N−1"),
        'delta_ctrl': (n_sites - 1 if n_ok else None, "N−1"),
        'rabi_tgt': (n_sites - 1 if n_ok else None, "N−1"),
        'delta_tgt': (n_sites - 1 if n_ok else None, "N−1"),
    }
    for name, (length, label) in expected.items():
        if name not in data or data[name] is None:
            continue
        seq = _as_list(data[name])
        if seq is None:
            bad(name, f"must be a sequence (got {data[name]!r})")
            continue
        if n_ok and n_sites >= 2 and len(seq) != length:
            bad(name, f"length must be {label} = {length} (got {len(seq)})")
        for i, v in enumerate(seq):
            if not _is_finite_number(v):
                bad(name, f"entry {i} must be a finite number (got {v!r})")
            elif name.startswith('delta') and v == 0:
                bad(name, f"entry {i} is a zero detuning")
            elif not name.startswith('delta') and v < 0:
                bad(name, f"entry {i} must be ≥ 0 (got {v})")

    for name in ('hop', 'gamma', 'kappa'):
        v = data.get(name)
        if v is None:
            continue
        if not _is_finite_number(v):
            bad(name, f"must be a finite number (got {v!r})")
        elif v < 0:
            bad(name, f"must be ≥ 0 (got {v})")

    n_max = data.get('n_max')
    if n_max is not None:
        if not isinstance(n_max, int) or isinstance(n_max, bool):
            bad('n_max', f"must be an integer (got {n_max!r})")
        elif n_max < 0:
            bad('n_max', f"must be ≥ 0 (got {n_max})")

    return out


def flatten_sections(raw: Mapping[str, Any]) -> Dict[str, Any]:
    """Merge field-group sections into a flat mapping of SystemConfig fields."""
    flat: Dict[str, Any] = {}
    for key, value in raw.items():
        if key in FIELD_GROUPS and isinstance(value, Mapping):
            flat.update(value)
        elif key in CONFIG_FIELDS:
            flat[key] = value
    return flat


class SystemConfig(BaseModel):
    """
    Physical configuration of the ring (units of g).

    Attributes:
        n_sites: Number of cavities = atoms = modes (N >= 2)
        hop: Cavity-cavity hopping J_c
        g_atom: Atom-cavity couplings g_j, j = 1..N
        delta_cav: Cavity detunings Delta_j^(c), j = 1..N
        rabi_ctrl: Drives on atom 1, Omega_1^(m), m = 1..N-1
        delta_ctrl: Their detunings Delta_1^(m)
        rabi_tgt: Target drives Omega_n, n = 2..N
        delta_tgt: Their detunings Delta_n
        gamma: Excited-state decay rate
        kappa: Field decay rate
        n_max: Per-mode photon cutoff for full-dynamics simulation

    Example:
        >>> cfg = SystemConfig(
        ...     n_sites=2, hop=0.5, g_atom=(1, 1), delta_cav=(20, 20),
        ...     rabi_ctrl=(1,), delta_ctrl=(18,), rabi_tgt=(1,), delta_tgt=(18,),
        ... )
        >>> cfg.delta_1(1), cfg.delta_n(2)
        (18.0, 18.0)
    """

    model_config = ConfigDict(frozen=True)

    n_sites: int
    hop: float
    g_atom: Tuple[float, ...]
    delta_cav: Tuple[float, ...]
    rabi_ctrl: Tuple[float, ...]
    delta_ctrl: Tuple[float, ...]
    rabi_tgt: Tuple[float, ...]
    delta_tgt: Tuple[float, ...]
    gamma: float = Field(default=0.0)
    kappa: float = Field(default=0.0)
    n_max: int = Field(default=1)

    @model_validator(mode='after')
    def check_invariants(self):
        """Reject any configuration that collect_violations objects to."""
        violations = collect_violations(self.model_dump())
        if violations:
            raise ConfigError([str(v) for v in violations])
        return self

    # -- 1-based physics accessors ------------------------------------------

    def g(self, j: int) -> float:
        return self.g_atom[j - 1]

    def delta_c(self, j: int) -> float:
        return self.delta_cav[j - 1]

    def rabi_1(self, m: int) -> float:
        return self.rabi_ctrl[m - 1]

    def delta_1(self, m: int) -> float:
        return self.delta_ctrl[m - 1]

    def rabi_n(self, n: int) -> float:
        return self.rabi_tgt[n - 2]

    def delta_n(self, n: int) -> float:
        return self.delta_tgt[n - 2]

    @property
    def targets(self) -> range:
        """Target atom labels n = 2..N."""
        return range(2, self.n_sites + 1)

    @property
    def drives(self) -> range:
        """Control-drive labels m = 1..N-1."""
        return range(1, self.n_sites)

    def max_frequency(self) -> float:
        """Fastest oscillation of the full Hamiltonian: max |detuning| + 2 J_c."""
        detunings = self.delta_cav + self.delta_ctrl + self.delta_tgt
        return max(abs(d) for d in detunings) + 2.0 * self.hop

    # -- derived configurations ---------------------------------------------

    def with_pair(self, j: int, value: float) -> 'SystemConfig':
        """
        Return a copy with target j's detuning pair placed on resonance.

        Sets Delta_j = value and Delta_1^(j-1) = value + Delta_1^(c) - Delta_j^(c),
        so the first line of the resonance condition holds exactly. With equal
        cavity detunings this is Delta_1^(j-1) = Delta_j = value.
        """
        if j not in self.targets:
            raise ValueError(f"target index must be 2..{self.n_sites} (got {j})")
        ctrl = list(self.delta_ctrl)
        tgt = list(self.delta_tgt)
        tgt[j - 2] = value
        ctrl[j - 2] = value + self.delta_c(1) - self.delta_c(j)
        return self.model_copy(update={'delta_ctrl': tuple(ctrl), 'delta_tgt': tuple(tgt)})

    def with_updates(self, **updates: Any) -> 'SystemConfig':
        """Validated copy with fields replaced."""
        data = self.model_dump()
        data.update(updates)
        return SystemConfig.from_sections(data)

    # -- YAML round trip ----------------------------------------------------

    def to_sections(self) -> Dict[str, Dict[str, Any]]:
        data = self.model_dump()
        return {
            section: {f: (list(data[f]) if isinstance(data[f], tuple) else data[f]) for f in fields}
            for section, fields in FIELD_GROUPS.items()
        }

    def save_to_yaml(self, path: Path) -> None:
        """Write the configuration as sectioned YAML."""
        with open(path, 'w', encoding='utf-8') as f:
            yaml.dump(self.to_sections(), f, default_flow_style=None, sort_keys=False)

    @classmethod
    def from_sections(cls, raw: Mapping[str, Any]) -> 'SystemConfig':
        """Build from a sectioned (or flat) mapping; raises on any violation."""
        flat = flatten_sections(raw)
        violations = collect_violations(flat)
        if violations:
            raise ConfigError([str(v) for v in violations])
        return cls(**flat)

    @classmethod
    def load_from_yaml(cls, path: Path) -> 'SystemConfig':
        """
        Load a SystemConfig from a YAML file.

        Example:
            >>> cfg = SystemConfig.load_from_yaml(Path("configs/paper_n3.yaml"))
        """
        return cls.from_sections(read_config_sections(path))


def read_config_sections(path: Path) -> Dict[str, Any]:
    """
    Raw YAML mapping of a config file (sections not yet flattened).

    Raises:
        ConfigError: the file cannot be read, is not YAML, or is not a mapping
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError([f"{path}: cannot read ({e.strerror or e})"]) from e
    except yaml.YAMLError as e:
        raise ConfigError([f"{path}: not valid YAML ({e})"]) from e
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping (got {type(data).__name__})"])
    return data


def validate_config(cfg: Union[SystemConfig, Mapping[str, Any]]) -> ValidationResult:
    """
    Check every SystemConfig invariant and report violations as data.

    Accepts a SystemConfig (including one built with ``model_construct``, which
    skips validation) or a raw, possibly sectioned, mapping.
    """
    if isinstance(cfg, SystemConfig):
        data = cfg.model_dump()
    else:
        data = flatten_sections(cfg)
    return ValidationResult(violations=tuple(collect_violations(data)))


class ResonanceReport(BaseModel):
    """
    Detuning bookkeeping of the resonance condition.

    Attributes:
        pair_residuals: (m, n) with m = n-1 -> signed residual
            Delta_n^(c) - Delta_1^(c) - Delta_n + Delta_1^(m)
        cross_separations: (m, n) with m != n-1 -> |same expression|
        target_separations: (p, q), p != q -> |Delta_p^(c) - Delta_q^(c) - Delta_p + Delta_q|
    """

    model_config = ConfigDict(frozen=True)

    pair_residuals: Dict[Tuple[int, int], float]
    cross_separations: Dict[Tuple[int, int], float]
    target_separations: Dict[Tuple[int, int], float]

    def max_abs_residual(self) -> float:
        return max(abs(v) for v in self.pair_residuals.values())

    def min_separation(self) -> float:
        """Smallest off-resonance separation (inf when there is none, as for N = 2)."""
        values = list(self.cross_separations.values()) + list(self.target_separations.values())
        return min(values) if values else math.inf


def cross_detuning(cfg: SystemConfig, m: int, n: int) -> float:
    """Signed Delta_n^(c) - Delta_1^(c) - Delta_n + Delta_1^(m)."""
    return cfg.delta_c(n) - cfg.delta_c(1) - cfg.delta_n(n) + cfg.delta_1(m)


def target_detuning(cfg: SystemConfig, p: int, q: int) -> float:
    """Signed Delta_p^(c) - Delta_q^(c) - Delta_p + Delta_q."""
    return cfg.delta_c(p) - cfg.delta_c(q) - cfg.delta_n(p) + cfg.delta_n(q)


def resonance_pairing(cfg: SystemConfig) -> ResonanceReport:
    """Evaluate the resonance and off-resonance detuning combinations."""
    pairs: Dict[Tuple[int, int], float] = {}
    cross: Dict[Tuple[int, int], float] = {}
    for m in cfg.drives:
        for n in cfg.targets:
            value = cross_detuning(cfg, m, n)
            if m == n - 1:
                pairs[(m, n)] = value
            else:
                cross[(m, n)] = abs(value)
    targets = {
        (p, q): abs(target_detuning(cfg, p, q))
        for p in cfg.targets
        for q in cfg.targets
        if p != q
    }
    return ResonanceReport(
        pair_residuals=pairs, cross_separations=cross, target_separations=targets
    )
