"""Run configuration: flat ``key = value`` text with dotted section prefixes.

Example::

    seed = 7
    medium.sound_speed = 1500
    array.kind = planar
    array.nx = 8
    coarse.n_iters = 600

Lines starting with ``#`` are comments. Unknown keys are rejected so typos do
not silently fall back to defaults.
"""

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .model import Medium, make_hemispherical_array, make_planar_array, undersample_planar
from .optimizer import InitConfig, StageConfig
from .radiator import RadiatorConfig
from .shader import GridSpec


def parse_config_text(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"config line {lineno}: empty key")
        if key in out:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _bool(s):
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(x) for x in s.split(","))


def _ints(s):
    return tuple(int(x) for x in s.split(","))


DEFAULT_PATHS = {
    "phantom": "phantom.pcl",
    "signals": "signals.sig",
    "recon": "recon.pcl",
    "grid": "recon.vox",
    "truth_grid": "truth.vox",
    "ubp_grid": "ubp.vox",
    "log": "loss.csv",
    "metrics": "metrics.csv",
    "images": "map",
}


# key -> parser; the section prefix decides where the value goes
_SCHEMA = {
    "seed": int,
    "medium.sound_speed": float,
    "array.kind": str,
    "array.nx": int,
    "array.ny": int,
    "array.pitch": float,
    "array.center": _floats,
    "array.normal_axis": str,
    "array.stride": int,
    "array.n": int,
    "array.radius": float,
    "array.pole": _floats,
    "sampling.sample_rate": float,
    "sampling.num_samples": int,
    "sampling.t_start": float,
    "radiator.epsilon": float,
    "reconstruct.epsilon": float,
    "phantom.kind": str,
    "phantom.n": int,
    "phantom.bounds_min": _floats,
    "phantom.bounds_max": _floats,
    "phantom.p0_range": _floats,
    "phantom.a0_range": _floats,
    "phantom.ds": float,
    "phantom.n_segments": int,
    "phantom.radius": float,
    "phantom.pitch": float,
    "phantom.turns": float,
    "phantom.center": _floats,
    "phantom.p0": float,
    "phantom.a0": float,
    "init.bounds_min": _floats,
    "init.bounds_max": _floats,
    "init.n_points": int,
    "init.p0_range": _floats,
    "init.a0_range": _floats,
    "grid.origin": _floats,
    "grid.spacing": float,
    "grid.dims": _ints,
    "ubp.solid_angle": _bool,
    "metrics.axis": str,
    "metrics.signal_threshold": float,
    "metrics.background_threshold": float,
    "metrics.slice_axis": str,
    "metrics.slice_index": int,
    "paths.outdir": str,
}
for _stage in ("coarse", "fine"):
    for _f in fields(StageConfig):
        _SCHEMA[f"{_stage}.{_f.name}"] = _bool if _f.type is bool else _f.type
for _p in DEFAULT_PATHS:
    _SCHEMA[f"paths.{_p}"] = str


@dataclass
class RunConfig:
    seed: int = 0
    values: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_text(cls, text, base_dir=None):
        raw = parse_config_text(text)
        values = {}
        for key, s in raw.items():
            if key not in _SCHEMA:
                raise ValueError(f"unknown config key {key!r}")
            try:
                values[key] = _SCHEMA[key](s)
            except ValueError as exc:
                raise ValueError(f"bad value for {key!r}: {s!r} ({exc})") from None
        cfg = cls(values.pop("seed", 0), values, Path(base_dir or Path.cwd()))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        return cls.from_text(path.read_text(), base_dir=path.parent)

    @classmethod
    def demo(cls):
        text = resources.files("slingbag").joinpath("data/demo.cfg").read_text()
        return cls.from_text(text)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def section(self, prefix):
        n = len(prefix) + 1
        return {k[n:]: v for k, v in self.values.items() if k.startswith(prefix + ".")}

    # -- typed views ------------------------------------------------------

    def medium(self):
        return Medium(self.get("medium.sound_speed", 1500.0))

    def radiator(self):
        return RadiatorConfig(self.get("radiator.epsilon", 1e6))

    def recon_radiator(self):
        """Forward model used while fitting.

        Defaults to an edge width of one sample (``epsilon = fs / v``): sharper
        edges fall between samples and give the optimizer almost no gradient.
        """
        eps = self.get("reconstruct.epsilon")
        if eps is None:
            eps = self.get("sampling.sample_rate", 40e6) / self.medium().sound_speed
        return RadiatorConfig(eps)

    def sensor_array(self):
        sampling = dict(
            sample_rate=self.get("sampling.sample_rate", 40e6),
            num_samples=self.get("sampling.num_samples", 4096),
            t_start=self.get("sampling.t_start", 0.0),
        )
        kind = self.get("array.kind", "planar")
        if kind == "planar":
            arr = make_planar_array(
                self.get("array.nx", 8),
                self.get("array.ny", self.get("array.nx", 8)),
                self.get("array.pitch", 4e-3),
                self.get("array.center", (0.0, 0.0, 0.0)),
                self.get("array.normal_axis", "z"),
                **sampling,
            )
            stride = self.get("array.stride", 1)
            return undersample_planar(arr, stride) if stride != 1 else arr
        if kind == "hemisphere":
            return make_hemispherical_array(
                self.get("array.n", 1024),
                self.get("array.radius", 60e-3),
                self.get("array.center", (0.0, 0.0, 0.0)),
                self.get("array.pole", (0.0, 0.0, -1.0)),
                **sampling,
            )
        raise ValueError(f"unknown array.kind {kind!r}")

    def phantom(self):
        sec = self.section("phantom")
        kind = sec.pop("kind", "points")
        if "bounds_min" in sec or "bounds_max" in sec:
            sec["bounds"] = (sec.pop("bounds_min"), sec.pop("bounds_max"))
        return kind, sec

    def init(self):
        sec = self.section("init")
        lo = sec.get("bounds_min", (-5e-3, -5e-3, 15e-3))
        hi = sec.get("bounds_max", (5e-3, 5e-3, 25e-3))
        kw = {k: sec[k] for k in ("n_points", "p0_range", "a0_range") if k in sec}
        # offset so init draws never replay the phantom's stream
        return InitConfig((lo, hi), rng_seed=self.seed + 1, **kw)

    def stages(self):
        """Coarse and fine stages; ``split_a0_max`` defaults to 4x the grid spacing."""
        split = 4.0 * self.grid().spacing
        out = []
        for name, make in (("coarse", StageConfig.coarse), ("fine", StageConfig.fine)):
            sec = self.section(name)
            sec.setdefault("split_a0_max", split)
            out.append(make(**sec))
        return tuple(out)

    def grid(self):
        return GridSpec(
            self.get("grid.origin", (-5e-3, -5e-3, 15e-3)),
            self.get("grid.spacing", 0.2e-3),
            self.get("grid.dims", (51, 51, 51)),
        )

    def paths(self):
        outdir = self.base_dir / self.get("paths.outdir", "out")
        return {k: outdir / self.get(f"paths.{k}", v) for k, v in DEFAULT_PATHS.items()}

    def validate(self):
        self.medium()
        self.radiator()
        self.recon_radiator()
        self.sensor_array()
        self.init()
        self.stages()
        self.grid()
        resolved = [p.resolve() for p in self.paths().values()]
        if len(set(resolved)) != len(resolved):
            raise ValueError("config paths must all be distinct")
