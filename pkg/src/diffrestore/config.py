"""Run configuration files and named method presets.

Config files are INI-style: line-oriented `key = value` pairs grouped
into sections. All keys are optional; missing ones take the defaults
below, which match the reference setup (300 steps, nu 13, churn 5).

    [schedule]
    steps = 300
    nu = 13
    sigma_min = 1e-4
    sigma_max = 1.0
    s_churn = 5

    [guidance]
    guidance = rg              ; none | rg | pigdm
    rho_prime = 0.3
    delta_rho = true
    delta_rho_divisor = 75
    rho_time_convention = noise-level   ; or countdown-index
    grad_norm_power = 2

    [sampler]
    dc_enabled = true
    dc_order = pre             ; pre | post
    order = 1
    seed = 0

    [repaint]
    enabled = true
    u = 10
    phi1 = 1.5
    phi2 = 2.8

Presets are config files shipped with the package, one per method row
of the experiment matrix; `load_preset` resolves them by name.
"""

from __future__ import annotations

import configparser
import importlib.resources
from dataclasses import dataclass

from .guidance import GuidanceConfig
from .sampler import RepaintConfig, SamplerConfig
from .schedule import NoiseSchedule, build_schedule

__all__ = [
    "RunConfig",
    "parse_config_text",
    "load_config",
    "dump_config",
    "preset_names",
    "load_preset",
]


@dataclass(frozen=True)
class RunConfig:
    """Everything a restoration run needs besides the data."""

    sampler: SamplerConfig
    schedule: NoiseSchedule


def _default_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_dict(
        {
            "schedule": {
                "steps": "300",
                "nu": "13",
                "sigma_min": "1e-4",
                "sigma_max": "1.0",
                "s_churn": "5",
                "s_noise": "1.0",
            },
            "guidance": {
                "guidance": "none",
                "rho_prime": "0.25",
                "delta_rho": "false",
                "delta_rho_divisor": "75",
                "rho_time_convention": "noise-level",
                "grad_norm_power": "2",
            },
            "sampler": {
                "dc_enabled": "false",
                "dc_order": "pre",
                "order": "1",
                "seed": "0",
            },
            "repaint": {
                "enabled": "false",
                "u": "0",
                "phi1": "0",
                "phi2": "0",
            },
        }
    )
    return parser


def parse_config_text(text: str) -> RunConfig:
    """Parse config file contents into a run configuration."""
    parser = _default_parser()
    parser.read_string(text)

    sched = parser["schedule"]
    schedule = build_schedule(
        steps=sched.getint("steps"),
        nu=sched.getfloat("nu"),
        sigma_min=sched.getfloat("sigma_min"),
        sigma_max=sched.getfloat("sigma_max"),
        s_churn=sched.getfloat("s_churn"),
        s_noise=sched.getfloat("s_noise"),
    )

    guid = parser["guidance"]
    guidance = GuidanceConfig(
        kind=guid.get("guidance"),
        rho_prime=guid.getfloat("rho_prime"),
        delta_rho_enabled=guid.getboolean("delta_rho"),
        delta_rho_divisor=guid.getfloat("delta_rho_divisor"),
        rho_time_convention=guid.get("rho_time_convention"),
        grad_norm_power=guid.getint("grad_norm_power"),
    )

    rp_sec = parser["repaint"]
    rp = RepaintConfig(
        enabled=rp_sec.getboolean("enabled"),
        u=rp_sec.getint("u"),
        phi1=rp_sec.getfloat("phi1"),
        phi2=rp_sec.getfloat("phi2"),
    )

    samp = parser["sampler"]
    sampler = SamplerConfig(
        guidance=guidance,
        dc_enabled=samp.getboolean("dc_enabled"),
        rp=rp,
        order=samp.getint("order"),
        seed=samp.getint("seed"),
        dc_order=samp.get("dc_order"),
    )
    return RunConfig(sampler=sampler, schedule=schedule)


def load_config(path) -> RunConfig:
    with open(path, "r") as fh:
        return parse_config_text(fh.read())


def dump_config(cfg: RunConfig) -> str:
    """Render a run configuration back to config-file text."""
    sampler = cfg.sampler
    guidance = sampler.guidance
    rp = sampler.rp
    schedule = cfg.schedule
    lines = [
        "[schedule]",
        f"steps = {schedule.steps}",
        f"nu = {schedule.nu:g}",
        f"sigma_min = {schedule.sigma_min:g}",
        f"sigma_max = {schedule.sigma_max:g}",
        f"s_churn = {schedule.s_churn:g}",
        f"s_noise = {schedule.s_noise:g}",
        "",
        "[guidance]",
        f"guidance = {guidance.kind}",
        f"rho_prime = {guidance.rho_prime:g}",
        f"delta_rho = {str(guidance.delta_rho_enabled).lower()}",
        f"delta_rho_divisor = {guidance.delta_rho_divisor:g}",
        f"rho_time_convention = {guidance.rho_time_convention}",
        f"grad_norm_power = {guidance.grad_norm_power}",
        "",
        "[sampler]",
        f"dc_enabled = {str(sampler.dc_enabled).lower()}",
        f"dc_order = {sampler.dc_order}",
        f"order = {sampler.order}",
        f"seed = {sampler.seed}",
        "",
        "[repaint]",
        f"enabled = {str(rp.enabled).lower()}",
        f"u = {rp.u}",
        f"phi1 = {rp.phi1:g}",
        f"phi2 = {rp.phi2:g}",
        "",
    ]
    return "\n".join(lines)


def preset_names() -> list[str]:
    """Names of the shipped method presets, sorted."""
    root = importlib.resources.files("diffrestore") / "presets"
    return sorted(p.name[: -len(".ini")] for p in root.iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> RunConfig:
    """Load a shipped preset by name (see `preset_names`)."""
    root = importlib.resources.files("diffrestore") / "presets"
    path = root / f"{name}.ini"
    if not path.is_file():
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config_text(path.read_text())
