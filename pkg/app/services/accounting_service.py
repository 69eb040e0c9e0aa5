"""
Módulo de servicio de contabilidad de ingresos
Valores presentes, cota de suavizamiento del consumo y comparación de utilidades entre regímenes
"""
import logging
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd
from scipy import optimize

from app.exceptions import DomainError, NumericalError
from app.models.accounting import CorollaryReport, RegimeUtility, SavingsPlan, UtilityModel
from app.models.equilibrium import EquilibriumProfile
from app.models.token import MonetaryPolicy
from app.models.trace import SimulationTrace
from app.models.valuation import MonteCarloEstimate, ValuationDistribution
from app.services.equilibrium_service import EquilibriumService
from app.services.simulation_service import SimulationService
from app.services.valuation_service import ValuationService

logger = logging.getLogger(__name__)

CONSUME_INCOME = 'consume-income'
SMOOTH_TO_EXPECTED = 'smooth-to-expected'
SAVINGS_RULES = (CONSUME_INCOME, SMOOTH_TO_EXPECTED)

EULER_TOLERANCE = 1e-8


def annuity_factor(beta: float, periods: int) -> float:
    """Suma de beta^s para s = 0..periods-1"""
    return float(np.sum(beta ** np.arange(periods)))


class AccountingService:
    """Servicio de contabilidad de ingresos y utilidades del subastador"""

    def __init__(self,
                 valuation_service: Optional[ValuationService] = None,
                 equilibrium_service: Optional[EquilibriumService] = None,
                 simulation_service: Optional[SimulationService] = None):
        self.valuation_service = valuation_service or ValuationService()
        self.equilibrium_service = equilibrium_service or EquilibriumService(self.valuation_service)
        self.simulation_service = simulation_service or SimulationService(self.valuation_service)

    def pdv(self, stream, beta: float):
        """
        Valor presente descontado: suma_t beta^(t-1)·stream_t

        El último eje de `stream` es el tiempo, así que acepta una matriz de
        trayectorias y devuelve un valor por trayectoria.
        """
        values = np.asarray(stream, dtype=float)
        if not np.all(np.isfinite(values)):
            raise DomainError('El flujo debe ser finito')
        result = values @ (beta ** np.arange(values.shape[-1]))
        return float(result) if np.ndim(result) == 0 else result

    def prop1_value(self, k: float, horizon: int, beta: float, t: int,
                    p_e_t: float, M_t: float, A_t: float) -> float:
        """Ingresos futuros esperados del subastador desde t: PDV del dólar menos lo ya comprometido"""
        if not 1 <= t <= horizon:
            raise DomainError(f'El periodo t={t} debe estar en 1..{horizon}')
        if not M_t >= A_t >= 0:
            raise DomainError('Se requiere M_t >= A_t >= 0')
        return annuity_factor(beta, horizon - t + 1) * k - p_e_t * (M_t - A_t)

    def smoothed_value(self, wealth, utility: UtilityModel, horizon: int):
        """
        Utilidad del plan óptimo sin riesgo dado un valor presente de riqueza

        Con beta·R = 1 el consumo es constante: c = W / suma_t beta^(t-1).
        """
        factor = annuity_factor(utility.beta, horizon)
        wealth = np.asarray(wealth, dtype=float)
        if utility.kind == 'risk-neutral':
            return wealth
        return factor * utility.utility(wealth / factor)

    def optimal_riskfree_savings(self, income, utility: UtilityModel) -> SavingsPlan:
        """
        Plan óptimo de activos con ingreso conocido y endeudamiento permitido

        Se resuelven las ecuaciones de Euler U'(c_t) = beta·R·U'(c_(t+1)) con
        scipy.optimize.root sobre log-consumos; el consumo del último periodo
        sale de la restricción presupuestaria con w_(T+1) = 0.

        Args:
            income: Ingresos por periodo (el del periodo 1 ya realizado)
            utility (UtilityModel): Preferencias y activos iniciales

        Returns:
            SavingsPlan: Activos w_2..w_T, consumo, utilidad y residuos de Euler

        Raises:
            DomainError: Si la riqueza es no positiva con utilidad log/CRRA
            NumericalError: Si el solver no converge
        """
        income = np.asarray(income, dtype=float)
        horizon = income.size
        beta, R = utility.beta, utility.gross_return
        discounts = beta ** np.arange(horizon)
        wealth = utility.w1 + float(income @ discounts)

        if utility.kind == 'risk-neutral':
            consumption = income.copy()
            consumption[0] += utility.w1
            return self._plan(consumption, income, utility)
        if wealth <= 0:
            raise DomainError(f'Riqueza no positiva ({wealth:.6g}) con utilidad {utility.kind}')
        if horizon == 1:
            return self._plan(np.array([wealth]), income, utility)

        level = wealth / discounts.sum()
        guess = 0.5 * (np.maximum(income[:-1], 0.0) + level)

        def last_consumption(early):
            return (wealth - float(early @ discounts[:-1])) / discounts[-1]

        def residuals(z):
            early = np.exp(z)
            final = last_consumption(early)
            if final <= 0:
                return np.full(z.size, 1e6)
            path = np.append(early, final)
            marginal = utility.marginal_utility(path)
            return marginal[:-1] - beta * R * marginal[1:]

        solution = optimize.root(residuals, np.log(guess), method='hybr', options={'xtol': 1e-14})
        early = np.exp(solution.x)
        consumption = np.append(early, last_consumption(early))
        plan = self._plan(consumption, income, utility)
        if max(abs(r) for r in plan.euler_residuals) > EULER_TOLERANCE:
            raise NumericalError(f'El problema de ahorro no convergió: {solution.message}')
        return plan

    def _plan(self, consumption: np.ndarray, income: np.ndarray, utility: UtilityModel) -> SavingsPlan:
        R = utility.gross_return
        assets = []
        holding = utility.w1
        for c, y in zip(consumption[:-1], income[:-1]):
            holding = R * (holding + y - c)
            assets.append(float(holding))
        marginal = utility.marginal_utility(consumption)
        residuals = marginal[:-1] - utility.beta * R * marginal[1:]
        discounts = utility.beta ** np.arange(consumption.size)
        return SavingsPlan(
            assets=assets,
            consumption=consumption.tolist(),
            utility=float(discounts @ utility.utility(consumption)),
            euler_residuals=residuals.tolist()
        )

    def pledged_value(self, k: float, beta: float, horizon: int) -> float:
        """Valor presente en t=1 de los pagos esperados de los periodos 2..T"""
        return beta * annuity_factor(beta, horizon - 1) * k if horizon > 1 else 0.0

    def lemma1_upper_bound(self, dist: ValuationDistribution, n: int, horizon: int,
                           utility: UtilityModel, paths: int, seed: int) -> MonteCarloEstimate:
        """
        Cota superior de la utilidad de la subasta en dólares

        Promedio sobre B_1 de la utilidad suavizada con riqueza
        w1 + B_1 + beta·k·(1 - beta^(T-1))/(1 - beta). B_1 sale del mismo panel
        de valoraciones que las simulaciones con esa semilla.
        """
        samples = self._bound_samples(dist, n, horizon, utility, paths, seed)
        estimate = MonteCarloEstimate.from_samples(samples)
        logger.info(f"Cota de suavizamiento: {estimate.mean:.6f} ± {estimate.standard_error:.2e}")
        return estimate

    def _bound_samples(self, dist, n, horizon, utility, paths, seed) -> np.ndarray:
        k = self.valuation_service.total_payment_distribution(dist, n).mean
        trace = self.simulation_service.simulate_dollar_auction(dist, n, horizon, paths, seed)
        wealth = utility.w1 + trace.total_payment[:, 0] + self.pledged_value(k, utility.beta, horizon)
        return self.smoothed_value(wealth, utility, horizon)

    def savings_rule_utility(self, rule: str, revenue: np.ndarray, utility: UtilityModel,
                             k: float) -> np.ndarray:
        """
        Utilidad realizada por trayectoria con una regla de ahorro sin endeudamiento

        consume-income: consume el ingreso más la anualidad de w1.
        smooth-to-expected: consume el nivel constante que financiarían el
        efectivo disponible y los ingresos esperados restantes, sin endeudarse.
        """
        paths, horizon = revenue.shape
        beta, R = utility.beta, utility.gross_return
        consumption = np.zeros_like(revenue)

        if rule == CONSUME_INCOME:
            consumption = revenue + utility.w1 / annuity_factor(beta, horizon)
        elif rule == SMOOTH_TO_EXPECTED:
            assets = np.full(paths, utility.w1)
            for i in range(horizon):
                remaining = horizon - i
                cash = assets + revenue[:, i]
                expected_future = k * (annuity_factor(beta, remaining) - 1.0)
                target = (cash + expected_future) / annuity_factor(beta, remaining)
                consumption[:, i] = np.minimum(cash, target)
                assets = R * (cash - consumption[:, i])
        else:
            raise DomainError(f'Regla de ahorro no soportada: {rule}')

        if utility.requires_positive_consumption and np.any(consumption <= 0):
            raise DomainError(
                f'La regla {rule} produce consumo no positivo; use w1 > 0 o una distribución con v_low > 0'
            )
        return utility.utility(consumption) @ (beta ** np.arange(horizon))

    def corollary_comparison(self, dist: ValuationDistribution, n: int, horizon: int,
                             utility: UtilityModel, paths: int, seed: int,
                             savings_rules: Iterable[str] = SAVINGS_RULES,
                             tolerance_sigmas: float = 3.0) -> CorollaryReport:
        """
        Comparar la subasta con quema de tokens contra la subasta en dólares

        (a) quema total (sigma = -1 en todos los periodos): todo el ingreso llega
        en t=1 y luego se suaviza; (b) dólares con cada regla de ahorro factible.
        Todas las corridas comparten el panel de valoraciones.
        """
        beta = utility.beta
        policy = MonetaryPolicy.constant(horizon, sigma=-1.0)
        profile = self.equilibrium_service.solve_backward(dist, n, horizon, beta, policy)
        token_trace = self.simulation_service.simulate_token_auction(profile, dist, n, horizon, 1.0, paths, seed)
        token_samples = self.smoothed_value(utility.w1 + self.pdv(token_trace.revenue, beta), utility, horizon)

        bound_samples = self._bound_samples(dist, n, horizon, utility, paths, seed)
        dollar_trace = self.simulation_service.simulate_dollar_auction(dist, n, horizon, paths, seed)
        k = profile.payment_law.mean

        rules = []
        for rule in savings_rules:
            samples = self.savings_rule_utility(rule, dollar_trace.revenue, utility, k)
            rules.append(RegimeUtility(
                regime=f'dollars:{rule}',
                estimate=MonteCarloEstimate.from_samples(samples),
                gap_to_token=MonteCarloEstimate.from_samples(token_samples - samples)
            ))

        report = CorollaryReport(
            token_burn=RegimeUtility('tokens:burn', MonteCarloEstimate.from_samples(token_samples)),
            upper_bound=RegimeUtility(
                'lemma1-bound',
                MonteCarloEstimate.from_samples(bound_samples),
                MonteCarloEstimate.from_samples(token_samples - bound_samples)
            ),
            dollar_rules=rules,
            tolerance_sigmas=tolerance_sigmas
        )
        logger.info(
            f"Comparación de utilidades: quema={report.token_burn.estimate.mean:.6f}, "
            f"cota={report.upper_bound.estimate.mean:.6f}, preferida={report.token_preferred}"
        )
        return report

    def bidder_continuation_value(self, profile: EquilibriumProfile, t: int, a: float, M_t: float) -> float:
        """Utilidad de continuación esperada de un postor con a tokens al inicio de t"""
        g = self.valuation_service.expected_bidder_surplus(profile.distribution, profile.n)
        price = self.equilibrium_service.expected_price(profile, t, M_t)
        return price * a + g * annuity_factor(profile.beta, profile.horizon - t + 1)

    def revenue_profile(self, trace: SimulationTrace, beta: float) -> Dict:
        """
        Resumen de cuándo llegan los ingresos: media y varianza por periodo,
        VPD medio, varianza del VPD posterior al periodo 1 y participación de t=1
        """
        discounts = trace.discount_factors(beta)
        pdv = trace.pdv_revenue(beta)
        later = trace.revenue[:, 1:] @ discounts[1:] if trace.horizon > 1 else np.zeros(trace.paths)
        mean_pdv = float(pdv.mean())
        periods = pd.DataFrame({
            't': np.arange(1, trace.horizon + 1),
            'revenue_mean': trace.revenue.mean(axis=0),
            'revenue_variance': trace.revenue.var(axis=0, ddof=1) if trace.paths > 1 else 0.0,
        })
        return {
            'regime': trace.regime,
            'periods': periods,
            'pdv': MonteCarloEstimate.from_samples(pdv),
            'pdv_after_first_variance': float(later.var(ddof=1)) if trace.paths > 1 else 0.0,
            'period1_share': float(trace.revenue[:, 0].mean() / mean_pdv) if mean_pdv > 0 else float('nan'),
        }

    def continuation_identity_gap(self, trace: SimulationTrace, profile: EquilibriumProfile,
                                  k: float) -> pd.DataFrame:
        """
        Diferencia entre el VPD de continuación realizado y el valor predicho en cada t

        El valor predicho usa el stock y las tenencias del subastador al inicio
        de t: annuity·k - (P_t/M_t)·(M_t - A_t). La media debe ser ~0.
        """
        if trace.stock is None:
            raise DomainError('La identidad de continuación requiere una traza en tokens')
        beta, horizon = profile.beta, trace.horizon
        rows = []
        for t in range(1, horizon + 1):
            i = t - 1
            realized = trace.revenue[:, i:] @ (beta ** np.arange(horizon - i))
            outstanding = trace.stock[:, i] - trace.auctioneer_tokens[:, i]
            predicted = annuity_factor(beta, horizon - t + 1) * k \
                - profile.market_cap(t) / trace.stock[:, i] * outstanding
            gap = MonteCarloEstimate.from_samples(realized - predicted)
            rows.append({'t': t, 'gap_mean': gap.mean, 'gap_se': gap.standard_error})
        return pd.DataFrame(rows, columns=['t', 'gap_mean', 'gap_se'])
