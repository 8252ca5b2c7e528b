"""Run configuration: INI files layered over the built-in paper preset."""

from configparser import ConfigParser, Error as IniError
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
import hashlib

import numpy as np

from .crystal import CrystalConfig, SellmeierSet, default_material, load_material
from .focksim import DetectorModel, DetectorSet, SourceConfig
from .units import GaussianSpectrum, UM, path_length_to_delay

PRESETS = ("paper", "experiment", "separable", "matched", "weak-lo", "unheralded")
JSA_MODELS = ("spdc", "separable")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    material: SellmeierSet
    crystal: CrystalConfig
    pump: GaussianSpectrum
    signal: GaussianSpectrum
    idler: GaussianSpectrum
    lo: GaussianSpectrum
    jsa_model: str
    grid_points: int
    span_fwhm: float
    source: SourceConfig
    detectors: DetectorSet
    delays: np.ndarray
    pulses: int
    seed: int
    digest: str

    @property
    def positions_um(self):
        return self.delays * 2.99792458e8 / UM


def preset_text(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("homsim.data.presets").joinpath(f"{name}.ini").read_text()


def read_layers(presets=(), config_path=None, overrides=None):
    """Merge paper preset, extra presets, a user file and ``{section: {key: value}}`` overrides."""
    parser = ConfigParser()
    parser.read_string(preset_text("paper"))
    for name in presets:
        parser.read_string(preset_text(name))
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except IniError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    for section, values in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        for key, value in values.items():
            parser[section][key] = str(value)
    return parser


def _digest(parser):
    text = "\n".join(
        f"[{s}]" + "".join(f"\n{k}={v}" for k, v in sorted(parser[s].items())) for s in sorted(parser.sections())
    )
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _spectrum(parser, section):
    sec = parser[section]
    return GaussianSpectrum(sec.getfloat("center_nm"), sec.getfloat("fwhm_nm"))


def _delays(scan):
    if "positions_um" in scan:
        raw = [v for v in scan["positions_um"].replace(",", " ").split() if v]
        positions = np.array([float(v) for v in raw])
    else:
        n = scan.getint("points")
        if n < 1:
            raise ConfigError("the delay scan is empty")
        positions = np.linspace(scan.getfloat("start_um"), scan.getfloat("stop_um"), n)
    if positions.size == 0:
        raise ConfigError("the delay scan is empty")
    return path_length_to_delay(positions * UM)


def build_config(parser):
    """Validate every parameter before any computation; raises :class:`ConfigError`."""
    try:
        cr = parser["crystal"]
        mat_ref = cr.get("material", "builtin").strip()
        if mat_ref == "builtin":
            material = default_material()
        else:
            if not Path(mat_ref).is_file():
                raise ConfigError(f"material file not found: {mat_ref}")
            material = load_material(mat_ref)
        crystal = CrystalConfig(material, cr.getfloat("length_mm"), cr.getfloat("theta_deg"))

        jsa = parser["jsa"]
        model = jsa.get("model", "spdc")
        if model not in JSA_MODELS:
            raise ConfigError(f"jsa model must be one of {JSA_MODELS}, got {model!r}")
        points = jsa.getint("grid_points")
        span = jsa.getfloat("span_fwhm")
        if points < 2 or not span > 0:
            raise ConfigError(f"invalid grid: {points} points, span {span} FWHM")

        src = parser["source"]
        source_kwargs = dict(
            pair_probability=src.getfloat("pair_probability"),
            statistics=src.get("statistics"),
            herald_efficiency=src.getfloat("herald_efficiency"),
            lo_mean_photons=src.getfloat("lo_mean_photons"),
            signal=_spectrum(parser, "signal"),
            lo=_spectrum(parser, "lo"),
        )
        source = SourceConfig(**source_kwargs)

        det = parser["detectors"]
        detectors = DetectorSet(
            DetectorModel(det.getfloat("d1_efficiency"), det.getfloat("d1_dark")),
            DetectorModel(det.getfloat("d2_efficiency"), det.getfloat("d2_dark")),
            DetectorModel(det.getfloat("herald_efficiency"), det.getfloat("herald_dark")),
        )
        sim = parser["simulate"]
        pulses = sim.getint("pulses")
        if pulses < 0:
            raise ConfigError("pulses per point must be non-negative")
        return RunConfig(
            material=material,
            crystal=crystal,
            pump=_spectrum(parser, "pump"),
            signal=source.signal,
            idler=_spectrum(parser, "idler"),
            lo=source.lo,
            jsa_model=model,
            grid_points=points,
            span_fwhm=span,
            source=source,
            detectors=detectors,
            delays=_delays(parser["scan"]),
            pulses=pulses,
            seed=sim.getint("seed"),
            digest=_digest(parser),
        )
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(presets=(), config_path=None, overrides=None):
    return build_config(read_layers(presets, config_path, overrides))
