"""Platform assembly: template registry and ledger genesis.

Bootstrap registers every template, the operator, oracle parties, and the
arbitrator pool, then creates the operator-signed infrastructure contracts:
the date clock and its public update, the lease registry, and the public
arbitrator roster.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import maintenance, rental, rentcollect
from .ledger import LedgerEngine, ValidationError
from .ledger.model import PUBLIC

ROLES = ("tenant", "landlord", "arbitrator", "operator", "oracle")


def all_templates() -> list:
    return rental.templates() + rentcollect.templates() + maintenance.templates()


def install_templates(engine: LedgerEngine) -> None:
    for td in all_templates():
        engine.register_template(td)


@dataclass
class PlatformConfig:
    operator: str = "Operator"
    providers: tuple = ("TimeProvider",)
    lifecyclers: tuple = ("Lifecycler",)
    arbitrators: tuple = ("Arb1", "Arb2", "Arb3")
    users: tuple = ()
    initial_date: Optional[str] = None  # defaults to the engine clock's date
    skew_seconds: float = 60.0

    @classmethod
    def from_dict(cls, data: dict) -> "PlatformConfig":
        kwargs = {}
        for name in ("operator", "initial_date", "skew_seconds"):
            if name in data:
                kwargs[name] = data[name]
        for name in ("providers", "lifecyclers", "arbitrators", "users"):
            if name in data:
                kwargs[name] = tuple(data[name])
        return cls(**kwargs)


@dataclass
class Platform:
    """A bootstrapped engine plus the identities the oracles act under."""

    engine: LedgerEngine
    config: PlatformConfig
    clock_cid: str = ""
    update_cid: str = ""
    registry_cid: str = ""
    roster_cid: str = ""

    @property
    def operator(self) -> str:
        return self.config.operator

    @property
    def provider(self) -> str:
        return self.config.providers[0]

    @property
    def lifecycler(self) -> str:
        return self.config.lifecyclers[0]


def bootstrap(engine: LedgerEngine, config: Optional[PlatformConfig] = None, **overrides) -> Platform:
    cfg = config or PlatformConfig(**overrides)
    if config is not None and overrides:
        raise ValidationError("pass either a config object or keyword overrides, not both")
    if not cfg.providers:
        raise ValidationError("at least one time provider is required")
    if not cfg.lifecyclers:
        raise ValidationError("at least one lifecycler is required")

    install_templates(engine)
    engine.register_party(cfg.operator, *cfg.providers, *cfg.lifecyclers, *cfg.arbitrators, *cfg.users)

    start = cfg.initial_date or engine.now().date().isoformat()
    platform = Platform(engine=engine, config=cfg)

    clock = engine.create(
        cfg.operator,
        rentcollect.DATE_CLOCK,
        {
            "operator": cfg.operator,
            "providers": sorted(cfg.providers),
            "creator": sorted(cfg.providers)[0],
            "waitingAccept": [],
            "date": start,
        },
    )
    update = engine.create(
        cfg.operator,
        rentcollect.CLOCK_UPDATE,
        {"operator": cfg.operator, "date": start, "clockProviders": sorted(cfg.providers)},
    )
    registry = engine.create(
        cfg.operator,
        rentcollect.EVOLVE,
        {"operator": cfg.operator, "lifecyclers": sorted(cfg.lifecyclers), "laKeys": []},
    )
    roster = engine.create(
        cfg.operator,
        maintenance.AVAILABLE_ARBITRATORS,
        {"operator": cfg.operator, "arbitrators": sorted(cfg.arbitrators), "observers": [PUBLIC]},
    )
    platform.clock_cid = clock.contract_id
    platform.update_cid = update.contract_id
    platform.registry_cid = registry.contract_id
    platform.roster_cid = roster.contract_id
    return platform


def new_platform(clock=None, skew: float = 60.0, **overrides) -> Platform:
    """Fresh engine + bootstrap in one call (tests, benchmark, scenarios)."""
    engine = LedgerEngine(clock=clock, skew=skew)
    return bootstrap(engine, **overrides)
