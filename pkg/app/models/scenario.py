"""
Módulo del modelo de escenario
Configuración de un experimento tal como se lee del archivo YAML
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

from app.models.accounting import UtilityModel
from app.models.extension import TwoPeriodConfig
from app.models.token import MonetaryPolicy
from app.models.trace import REGIMES
from app.models.valuation import ValuationDistribution

DEFAULT_SAVINGS_RULES = ('consume-income', 'smooth-to-expected')
DEFAULT_C_GRID = (0.0, 0.5, 1.0, 2.0, 5.0)


@dataclass
class ScenarioConfig:
    """Escenario validado de un experimento"""
    name: str
    distribution: ValuationDistribution
    n: int
    horizon: int
    beta: float
    M1: float
    policy: MonetaryPolicy
    utility: UtilityModel
    savings_rules: Tuple[str, ...]
    paths: int
    seed: int
    tolerance_sigmas: float
    regimes: Tuple[str, ...]
    output_dir: str
    output_prefix: str
    output_format: str
    extension: TwoPeriodConfig
    c_grid: Tuple[float, ...]
    raw: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], defaults: Dict[str, Any]) -> 'ScenarioConfig':
        """
        Construir el escenario desde un diccionario ya validado

        Args:
            raw (dict): Contenido del YAML con las sobrescrituras aplicadas
            defaults (dict): Valores por defecto de la aplicación (semilla, trayectorias, carpeta)
        """
        horizon = int(raw['T'])
        beta = float(raw['beta'])
        distribution = ValuationDistribution.from_dict(raw['distribution'])
        policy_spec = raw.get('policy') or {}
        policy = MonetaryPolicy.from_vectors(
            policy_spec.get('tau', [0.0] * horizon),
            policy_spec.get('sigma', [0.0] * horizon)
        )

        utility_spec = raw.get('utility') or {}
        utility = UtilityModel(
            kind=utility_spec.get('kind', 'risk-neutral'),
            w1=float(utility_spec.get('w1', 0.0)),
            beta=beta,
            gamma=utility_spec.get('gamma')
        )

        mc = raw.get('mc') or {}
        output = raw.get('output') or {}

        extension_spec = raw.get('extension') or {}
        extension_distribution = (
            ValuationDistribution.from_dict(extension_spec['distribution'])
            if 'distribution' in extension_spec else ValuationDistribution.uniform(1.0, 2.0)
        )
        extension = TwoPeriodConfig(
            beta=float(extension_spec.get('beta', beta)),
            c=0.0,
            distribution=extension_distribution,
            n=int(extension_spec.get('n', raw['n'])),
            sigma_grid_points=int(extension_spec.get('sigma_grid_points', 201))
        )

        return cls(
            name=str(raw.get('name', 'scenario')),
            distribution=distribution,
            n=int(raw['n']),
            horizon=horizon,
            beta=beta,
            M1=float(raw.get('M1', 1.0)),
            policy=policy,
            utility=utility,
            savings_rules=tuple(utility_spec.get('savings_rules', DEFAULT_SAVINGS_RULES)),
            paths=int(mc.get('paths', defaults['paths'])),
            seed=int(mc.get('seed', defaults['seed'])),
            tolerance_sigmas=float(mc.get('tolerance_sigmas', 3.0)),
            regimes=tuple(raw.get('regimes', REGIMES)),
            output_dir=str(output.get('dir', defaults['output_dir'])),
            output_prefix=str(output.get('prefix', raw.get('name', 'scenario'))),
            output_format=str(output.get('format', 'csv')),
            extension=extension,
            c_grid=tuple(float(c) for c in extension_spec.get('c_grid', DEFAULT_C_GRID)),
            raw=raw
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convertir a diccionario"""
        return dict(self.raw)
