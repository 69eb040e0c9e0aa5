"""
Módulo de servicio de experimentos
Orquesta los subcomandos: carga y valida el escenario, ejecuta solvers y
simulaciones, verifica las identidades de aceptación y escribe los artefactos
"""
import copy
import logging
import math
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from app.exceptions import AcceptanceCheckError, ConfigurationError, DomainError
from app.models.auction import FIRST_PRICE, SECOND_PRICE, AuctionFormat
from app.models.scenario import ScenarioConfig
from app.models.token import MonetaryPolicy
from app.models.trace import DOLLARS, EQUITY, TOKENS
from app.services.accounting_service import AccountingService, annuity_factor
from app.services.artifact_service import ArtifactService
from app.services.auction_service import AuctionService
from app.services.effort_service import EffortService
from app.services.equilibrium_service import EquilibriumService
from app.services.simulation_service import SimulationService
from app.services.valuation_service import ValuationService
from app.utils.validators import load_scenario, validate_scenario

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-9
BRIDGE_TOLERANCE = 1e-8


class ExperimentService:
    """Servicio de orquestación de experimentos reproducibles"""

    def __init__(self,
                 valuation_service: Optional[ValuationService] = None,
                 auction_service: Optional[AuctionService] = None,
                 equilibrium_service: Optional[EquilibriumService] = None,
                 simulation_service: Optional[SimulationService] = None,
                 accounting_service: Optional[AccountingService] = None,
                 effort_service: Optional[EffortService] = None):
        self.valuation_service = valuation_service or ValuationService()
        self.auction_service = auction_service or AuctionService(self.valuation_service)
        self.equilibrium_service = equilibrium_service or EquilibriumService(self.valuation_service)
        self.simulation_service = simulation_service or SimulationService(
            self.valuation_service, self.auction_service
        )
        self.accounting_service = accounting_service or AccountingService(
            self.valuation_service, self.equilibrium_service, self.simulation_service
        )
        self.effort_service = effort_service or EffortService(self.valuation_service)

    # Configuración

    @staticmethod
    def apply_overrides(raw: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
        """Aplicar --seed, --paths, --out y --format sobre el escenario leído"""
        merged = copy.deepcopy(raw)
        targets = {'seed': ('mc', 'seed'), 'paths': ('mc', 'paths'),
                   'out': ('output', 'dir'), 'format': ('output', 'format')}
        for key, (section, field) in targets.items():
            value = overrides.get(key)
            if value is not None:
                if not isinstance(merged.get(section), dict):
                    merged[section] = {}
                merged[section][field] = value
        return merged

    def validate(self, config_path: str, overrides: Optional[Dict[str, Any]] = None) -> List[str]:
        """Lista de violaciones del escenario; vacía si se puede ejecutar"""
        raw = self.apply_overrides(load_scenario(config_path), overrides or {})
        return validate_scenario(raw)

    def load(self, config_path: str, overrides: Dict[str, Any], defaults: Dict[str, Any]) -> ScenarioConfig:
        """
        Cargar, sobrescribir y validar el escenario

        Raises:
            ConfigurationError: Con la lista de violaciones por campo
        """
        raw = self.apply_overrides(load_scenario(config_path), overrides)
        violations = validate_scenario(raw)
        if violations:
            raise ConfigurationError('Configuración inválida', violations)
        try:
            scenario = ScenarioConfig.from_dict(raw, defaults)
        except DomainError as e:
            raise ConfigurationError('Configuración inválida', [str(e)])
        logger.info(f"Escenario '{scenario.name}' cargado (T={scenario.horizon}, n={scenario.n})")
        return scenario

    def _artifacts(self, scenario: ScenarioConfig) -> ArtifactService:
        return ArtifactService(scenario.output_dir)

    def _write(self, scenario: ScenarioConfig, frame: pd.DataFrame, kind: str) -> str:
        return self._artifacts(scenario).write_frame(
            frame, scenario.output_prefix, kind, scenario.raw, scenario.seed, scenario.output_format
        )

    def _solve(self, scenario: ScenarioConfig, policy: Optional[MonetaryPolicy] = None):
        return self.equilibrium_service.solve_backward(
            scenario.distribution, scenario.n, scenario.horizon, scenario.beta, policy or scenario.policy
        )

    # Subcomandos

    def run_solve(self, scenario: ScenarioConfig) -> Dict[str, Any]:
        """Perfil de equilibrio (t, P_t, speculation_prob)"""
        self.valuation_service.regularity_check(scenario.distribution)
        profile = self._solve(scenario)
        path = self._write(scenario, profile.to_frame(), 'solve')
        return {
            'command': 'solve',
            'artifacts': [path],
            'summary': {'k': profile.payment_law.mean, 'P': profile.market_caps.tolist()}
        }

    def run_simulate(self, scenario: ScenarioConfig) -> Dict[str, Any]:
        """Trazas por régimen y resumen de la distribución temporal de ingresos"""
        dist, n, horizon = scenario.distribution, scenario.n, scenario.horizon
        paths, seed, beta = scenario.paths, scenario.seed, scenario.beta
        traces = []
        for regime in scenario.regimes:
            if regime == TOKENS:
                profile = self._solve(scenario)
                traces.append(self.simulation_service.simulate_token_auction(
                    profile, dist, n, horizon, scenario.M1, paths, seed))
            elif regime == DOLLARS:
                traces.append(self.simulation_service.simulate_dollar_auction(dist, n, horizon, paths, seed))
            elif regime == EQUITY:
                traces.append(self.simulation_service.simulate_equity_benchmark(
                    dist, n, horizon, beta, paths, seed))

        artifacts, summary, periods = [], {}, []
        for trace in traces:
            artifacts.append(self._write(scenario, trace.to_frame(), f'trace_{trace.regime}'))
            profile_summary = self.accounting_service.revenue_profile(trace, beta)
            frame = profile_summary['periods']
            frame.insert(0, 'regime', trace.regime)
            periods.append(frame)
            summary[trace.regime] = {
                'pdv_mean': profile_summary['pdv'].mean,
                'pdv_se': profile_summary['pdv'].standard_error,
                'period1_share': profile_summary['period1_share'],
                'pdv_after_first_variance': profile_summary['pdv_after_first_variance'],
            }
        if periods:
            artifacts.append(self._write(scenario, pd.concat(periods, ignore_index=True), 'revenue_profile'))
        return {'command': 'simulate', 'artifacts': artifacts, 'summary': summary}

    def run_compare_formats(self, scenario: ScenarioConfig) -> Dict[str, Any]:
        """
        Tabla de ingreso esperado en segundo y primer precio

        Ambos formatos usan el mismo flujo aleatorio; la tolerancia usa el
        error estándar combinado de las dos estimaciones.

        Raises:
            AcceptanceCheckError: Si los ingresos difieren más de tolerance_sigmas errores estándar
        """
        dist, n = scenario.distribution, scenario.n
        k = self.valuation_service.expected_second_highest(dist, n)
        estimates = {}
        for kind in (SECOND_PRICE, FIRST_PRICE):
            auction_format = AuctionFormat(kind, reserve=dist.support_low)
            rng = np.random.default_rng(scenario.seed)
            estimates[kind] = self.auction_service.expected_revenue(auction_format, dist, n, scenario.paths, rng)

        spa, fpa = estimates[SECOND_PRICE], estimates[FIRST_PRICE]
        pooled = math.hypot(spa.standard_error, fpa.standard_error)
        frame = pd.DataFrame([
            {'format': kind, 'revenue_mean': est.mean, 'revenue_se': est.standard_error, 'k': k}
            for kind, est in estimates.items()
        ])
        path = self._write(scenario, frame, 'formats')

        failures = []
        if abs(spa.mean - fpa.mean) > scenario.tolerance_sigmas * pooled + IDENTITY_TOLERANCE:
            failures.append(f'|E[B_FPA] - E[B_SPA]| = {abs(spa.mean - fpa.mean):.3e} supera la tolerancia')
        if not spa.within(k, scenario.tolerance_sigmas):
            failures.append(f'E[B_SPA] = {spa.mean:.6f} no coincide con k = {k:.6f}')
        self._raise_failures('compare-formats', failures)
        return {
            'command': 'compare-formats',
            'artifacts': [path],
            'summary': {'k': k, 'spa': spa.to_dict(), 'fpa': fpa.to_dict(), 'pooled_se': pooled}
        }

    def run_burn_demo(self, scenario: ScenarioConfig) -> Dict[str, Any]:
        """
        Verificar la identidad de la quema total de tokens

        Con sigma = -1 en todo periodo: r_t = 0 para t >= 2 en toda trayectoria,
        r_1 = B_1 + beta·(1 - beta^(T-1))/(1 - beta)·k y la traza coincide con el
        benchmark de equity trayectoria por trayectoria.
        """
        dist, n, horizon, beta = scenario.distribution, scenario.n, scenario.horizon, scenario.beta
        policy = MonetaryPolicy(scenario.policy.tau, tuple([-1.0] * horizon))
        profile = self._solve(scenario, policy)
        k = profile.payment_law.mean

        tokens = self.simulation_service.simulate_token_auction(
            profile, dist, n, horizon, scenario.M1, scenario.paths, scenario.seed)
        equity = self.simulation_service.simulate_equity_benchmark(
            dist, n, horizon, beta, scenario.paths, scenario.seed)

        pledged = self.accounting_service.pledged_value(k, beta, horizon)
        predicted_first = tokens.total_payment[:, 0] + pledged
        first_gap = float(np.max(np.abs(tokens.revenue[:, 0] - predicted_first)))
        later_max = float(np.max(np.abs(tokens.revenue[:, 1:]))) if horizon > 1 else 0.0
        equity_gap = float(np.max(np.abs(tokens.revenue - equity.revenue)))

        frame = pd.DataFrame({
            't': np.arange(1, horizon + 1),
            'token_revenue_mean': tokens.revenue.mean(axis=0),
            'equity_revenue_mean': equity.revenue.mean(axis=0),
            'token_revenue_max_abs': np.abs(tokens.revenue).max(axis=0),
            'token_equity_max_gap': np.abs(tokens.revenue - equity.revenue).max(axis=0),
            'predicted_mean': [annuity_factor(beta, horizon) * k] + [0.0] * (horizon - 1),
        })
        path = self._write(scenario, frame, 'burn_demo')

        pdv = self.accounting_service.revenue_profile(tokens, beta)['pdv']
        failures = []
        if later_max != 0.0:
            failures.append(f'Ingreso no nulo después del periodo 1 (máximo {later_max:.3e})')
        if first_gap > IDENTITY_TOLERANCE:
            failures.append(f'r_1 se desvía de B_1 + valor comprometido en {first_gap:.3e}')
        if equity_gap > IDENTITY_TOLERANCE:
            failures.append(f'La traza en tokens difiere del benchmark de equity en {equity_gap:.3e}')
        if not pdv.within(annuity_factor(beta, horizon) * k, scenario.tolerance_sigmas):
            failures.append(f'El VPD medio {pdv.mean:.6f} no coincide con el del régimen en dólares')
        self._raise_failures('burn-demo', failures)
        return {
            'command': 'burn-demo',
            'artifacts': [path],
            'summary': {
                'mean_r1': float(tokens.revenue[:, 0].mean()),
                'predicted_r1': annuity_factor(beta, horizon) * k,
                'max_later_revenue': later_max,
                'max_first_period_gap': first_gap,
            }
        }

    def run_corollary(self, scenario: ScenarioConfig) -> Dict[str, Any]:
        """Comparación de utilidades: quema de tokens vs. dólares con reglas de ahorro"""
        report = self.accounting_service.corollary_comparison(
            scenario.distribution, scenario.n, scenario.horizon, scenario.utility,
            scenario.paths, scenario.seed, scenario.savings_rules, scenario.tolerance_sigmas
        )
        path = self._write(scenario, report.to_frame(), 'corollary')

        failures = []
        if not report.bound_attained:
            failures.append('La utilidad con quema no alcanza la cota de suavizamiento')
        if not report.token_preferred:
            failures.append('Alguna regla en dólares supera a la quema de tokens')
        strict = scenario.utility.requires_positive_consumption and scenario.horizon > 1
        if strict and not report.strictly_preferred:
            failures.append('Con utilidad estrictamente cóncava la quema debería ser estrictamente preferida')
        self._raise_failures('corollary', failures)
        return {'command': 'corollary', 'artifacts': [path], 'summary': report.to_dict()}

    def run_extension(self, scenario: ScenarioConfig) -> Dict[str, Any]:
        """Barrido en c de la extensión con esfuerzo y sus verificaciones"""
        config = scenario.extension
        comparison = self.effort_service.compare_regimes(config, scenario.c_grid)
        path = self._write(scenario, comparison.to_frame(), 'extension')

        token = comparison.token_optimum
        bridge = abs(self.effort_service.token_auctioneer_utility(token.sigma_bar, config)
                     - self.effort_service.dollar_regime(config.with_c(0.0)).utility)
        frame = comparison.to_frame()
        dollars = frame['dollar_utility'].to_numpy()
        tokens = frame['token_utility'].to_numpy()

        failures = []
        if bridge > BRIDGE_TOLERANCE:
            failures.append(f'La utilidad con tokens en sigma_bar difiere de la de dólares con c=0 en {bridge:.3e}')
        if np.any(np.diff(dollars) < -1e-12):
            failures.append('La utilidad en dólares no es monótona en c')
        if np.ptp(tokens) > 1e-12:
            failures.append('La utilidad con tokens depende de c')
        if config.beta < 1:
            if not token.expected_alpha < 1:
                failures.append('E[alpha] en sigma* no es menor que 1')
            if scenario.c_grid[0] == 0 and not comparison.tokens_preferred_at_zero:
                failures.append('Con c=0 los tokens deberían ser estrictamente preferidos')
        wide = scenario.c_grid[-1] >= config.distribution.support_high + 2.0
        if wide and not comparison.dollars_preferred_at_top:
            failures.append('En el extremo superior de la rejilla los dólares deberían ser preferidos')
        self._raise_failures('extension', failures)
        return {
            'command': 'extension',
            'artifacts': [path],
            'summary': {
                'crossing_c': comparison.crossing_c,
                'sigma_star': token.sigma,
                'expected_alpha': token.expected_alpha,
                'bridge_gap': bridge,
                'note': comparison.note
            }
        }

    @staticmethod
    def _raise_failures(command: str, failures: List[str]) -> None:
        if failures:
            for failure in failures:
                logger.error(f"❌ {command}: {failure}")
            raise AcceptanceCheckError(f'{command}: ' + '; '.join(failures))
        logger.info(f"✅ {command}: todas las verificaciones pasaron")
