"""
Módulo de servicio de la extensión con esfuerzo
Modelo de dos periodos: régimen con tokens (esfuerzo alpha, elección de sigma)
y régimen en dólares con un título contingente limitado por el costo c
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize

from app.exceptions import ContractError, DomainError, NumericalError
from app.models.extension import (ContractSpec, DollarRegimeResult, RegimeComparison, SigmaOptimum,
                                  TokenPeriodTwo, TwoPeriodConfig)
from app.models.valuation import PaymentLaw
from app.services.valuation_service import ValuationService

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-14
FLAT_TOLERANCE = 1e-12
EFFORT_GRID_POINTS = 401
THRESHOLD_GRID_POINTS = 17
CONTRACT_GRID_POINTS = 7
ZOOM_ROUNDS = 3


def alpha_of(B1, sigma, k: float):
    """
    Fracción de tokens del subastador al inicio del periodo 2

    alpha = min(1, (sqrt(k^2 + 4·B1·(1+sigma)) - k)/2); vectorizada en B1 y sigma.
    """
    B1 = np.asarray(B1, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(B1 < 0) or np.any(sigma < -1):
        raise DomainError('Se requiere B1 >= 0 y sigma >= -1')
    alpha = np.minimum(1.0, (np.sqrt(k * k + 4.0 * B1 * (1.0 + sigma)) - k) / 2.0)
    return alpha.item() if alpha.ndim == 0 else alpha


class EffortService:
    """Servicio del modelo de dos periodos con esfuerzo no contratable"""

    def __init__(self, valuation_service: Optional[ValuationService] = None):
        self.valuation_service = valuation_service or ValuationService()

    def payment_law(self, config: TwoPeriodConfig) -> PaymentLaw:
        return self.valuation_service.total_payment_distribution(config.distribution, config.n)

    def expected_payment(self, config: TwoPeriodConfig) -> float:
        """k de la distribución configurada"""
        return self.payment_law(config).mean

    # Régimen con tokens

    def alpha_of(self, B1, sigma, k: float):
        return alpha_of(B1, sigma, k)

    def alpha_fixed_point_oracle(self, B1: float, sigma: float, tau: float, k: float) -> float:
        """
        alpha resolviendo el punto fijo de la demanda especulativa S_1 con brentq

        S_1 = max(0, 1 - B1·((1-S_1)(1+sigma) + S_1)/(k + alpha(S_1))) y
        alpha(S) = (1-S)(1+sigma)/((1-S)(1+sigma) + S). tau escala por igual a
        todos los tokens, por lo que no aparece en ninguna de las dos ecuaciones.

        Raises:
            NumericalError: Si la raíz no queda acotada en [0, 1]
        """
        if B1 < 0 or sigma < -1 or tau < -1:
            raise DomainError('Se requiere B1 >= 0, sigma >= -1 y tau >= -1')

        growth = 1.0 + sigma

        def alpha_at(S: float) -> float:
            kept = (1.0 - S) * growth
            total = kept + S
            return kept / total if total > 0 else 0.0

        def residual(S: float) -> float:
            total = (1.0 - S) * growth + S
            demand = 1.0 - B1 * total / (k + alpha_at(S)) if k + alpha_at(S) > 0 else 0.0
            return S - max(0.0, demand)

        low, high = residual(0.0), residual(1.0)
        if low > 0 or high < 0:
            raise NumericalError(f'La raíz de S_1 no está acotada (h(0)={low:.3e}, h(1)={high:.3e})')
        if low == 0.0:
            return alpha_at(0.0)
        if high == 0.0:
            return alpha_at(1.0)
        speculative = optimize.brentq(residual, 0.0, 1.0, xtol=ORACLE_TOLERANCE, rtol=4 * np.finfo(float).eps)
        return alpha_at(speculative)

    def token_equilibrium_period2(self, alpha: float, k: float, M2: float) -> TokenPeriodTwo:
        """Esfuerzo e* = alpha, precio esperado (k+alpha)/M2 y valor de los inversionistas"""
        if not 0 <= alpha <= 1:
            raise DomainError('alpha debe estar en [0, 1]')
        if M2 <= 0:
            raise DomainError('El stock M2 debe ser positivo')
        return TokenPeriodTwo(
            effort=alpha,
            expected_price=(k + alpha) / M2,
            investor_value=(1.0 - alpha) * (k + alpha)
        )

    def sigma_bar(self, config: TwoPeriodConfig) -> float:
        """sigma a partir del cual alpha = 1 para todo B1 >= v_low"""
        k = self.expected_payment(config)
        return (k + 1.0) / config.distribution.support_low - 1.0

    def _alpha_kink(self, sigma: float, k: float) -> List[float]:
        return [(k + 1.0) / (1.0 + sigma)] if sigma > -1 else []

    def token_auctioneer_utility(self, sigma: float, config: TwoPeriodConfig) -> float:
        """
        Utilidad esperada del subastador en el periodo 1 con tokens

        k + E[(1-alpha)(k+alpha)] + beta·(E[alpha(k+alpha)] - E[alpha^2]/2)
        """
        if sigma < -1:
            raise DomainError('sigma debe ser >= -1')
        law = self.payment_law(config)
        k = law.mean
        beta = config.beta

        def integrand(b):
            alpha = alpha_of(b, sigma, k)
            return (1.0 - alpha) * (k + alpha) + beta * (alpha * (k + alpha) - alpha * alpha / 2.0)

        return k + law.expect(integrand, breakpoints=self._alpha_kink(sigma, k))

    def expected_alpha(self, sigma: float, config: TwoPeriodConfig) -> float:
        law = self.payment_law(config)
        return law.expect(lambda b: alpha_of(b, sigma, law.mean), breakpoints=self._alpha_kink(sigma, law.mean))

    def sigma_first_order_condition(self, sigma: float, config: TwoPeriodConfig) -> float:
        """
        Derivada de la utilidad con tokens respecto a sigma

        E[(1 - k - 2·alpha + beta·(k + alpha))·d alpha/d sigma], con
        d alpha/d sigma = B1/sqrt(k^2 + 4·B1·(1+sigma)) mientras alpha < 1.
        """
        law = self.payment_law(config)
        k, beta = law.mean, config.beta

        def integrand(b):
            alpha = alpha_of(b, sigma, k)
            root = math.sqrt(k * k + 4.0 * float(b) * (1.0 + sigma))
            slope = float(b) / root if alpha < 1.0 and root > 0 else 0.0
            return (1.0 - k - 2.0 * alpha + beta * (k + alpha)) * slope

        return law.expect(np.vectorize(integrand), breakpoints=self._alpha_kink(sigma, k))

    def investor_value_peak(self, k: float) -> float:
        """alpha que maximiza el valor de los inversionistas (1-alpha)(k+alpha)"""
        return max(0.0, (1.0 - k) / 2.0)

    def optimize_sigma(self, config: TwoPeriodConfig) -> SigmaOptimum:
        """
        Maximizar la utilidad con tokens sobre sigma en [-1, sigma_bar]

        Búsqueda en rejilla seguida de refinamiento por sección dorada
        (scipy.optimize.minimize_scalar) alrededor del mejor punto.
        """
        upper = self.sigma_bar(config)
        grid = np.linspace(-1.0, upper, config.sigma_grid_points)
        values = np.array([self.token_auctioneer_utility(s, config) for s in grid])
        boundary_utility = float(values[-1])

        if values.max() - values.min() <= FLAT_TOLERANCE:
            logger.warning("⚠️ Objetivo plano en sigma, se devuelve la frontera sigma_bar")
            return SigmaOptimum(
                sigma=upper,
                utility=boundary_utility,
                expected_alpha=self.expected_alpha(upper, config),
                sigma_bar=upper,
                boundary_utility=boundary_utility,
                interior=False,
                diagnostic='objetivo plano dentro de la tolerancia'
            )

        best = int(np.argmax(values))
        sigma_star, utility_star = float(grid[best]), float(values[best])
        left, right = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]

        def negative(s):
            return -self.token_auctioneer_utility(min(max(s, -1.0), upper), config)

        try:
            if 0 < best < grid.size - 1:
                result = optimize.minimize_scalar(negative, bracket=(left, sigma_star, right),
                                                  method='golden', tol=1e-10)
            else:
                result = optimize.minimize_scalar(negative, bounds=(left, right), method='bounded',
                                                  options={'xatol': 1e-10})
            candidate = float(min(max(result.x, -1.0), upper))
            if -result.fun > utility_star:
                sigma_star, utility_star = candidate, float(-result.fun)
        except ValueError as e:
            logger.warning(f"⚠️ Refinamiento de sigma no disponible, se usa la rejilla: {str(e)}")

        expected = self.expected_alpha(sigma_star, config)
        interior = -1.0 < sigma_star < upper and expected < 1.0 and utility_star > boundary_utility
        diagnostic = None
        if config.beta < 1 and not interior:
            diagnostic = 'el óptimo no es interior pese a beta < 1'
            logger.warning(f"⚠️ sigma*={sigma_star:.6f}: {diagnostic}")

        logger.info(f"sigma* = {sigma_star:.8f}, utilidad {utility_star:.10f}, E[alpha] = {expected:.6f}")
        return SigmaOptimum(
            sigma=sigma_star,
            utility=utility_star,
            expected_alpha=expected,
            sigma_bar=upper,
            boundary_utility=boundary_utility,
            interior=interior,
            diagnostic=diagnostic
        )

    # Régimen en dólares

    def _effort_objective(self, law: PaymentLaw, contract: ContractSpec, effort):
        """E[rev - y2(rev)] - e^2/2 sin la constante k, vectorizado en el esfuerzo"""
        effort = np.asarray(effort, dtype=float)
        retained = contract.base - law.expected_shortfall(contract.base - effort)
        punished = contract.penalty * law.cdf(contract.threshold - effort, strict=True)
        return effort - retained - punished - effort ** 2 / 2.0

    def best_response_effort(self, config: TwoPeriodConfig, contract: ContractSpec) -> float:
        """
        Esfuerzo óptimo del subastador frente al calendario de pagos del contrato

        Se evalúa una rejilla más los quiebres (umbral y base desplazados por
        los átomos o extremos del soporte de B) y se refina con
        minimize_scalar acotado alrededor del mejor candidato.
        """
        law = self.payment_law(config)
        anchors = law.values if law.is_discrete else np.array([law.low, law.high])
        top = max(1.0, contract.threshold - law.low, 0.0)
        kinks = np.concatenate([contract.threshold - anchors, contract.base - anchors, [1.0, top]])
        # el castigo usa rev < umbral, así que e = umbral - átomo ya lo evita
        candidates = np.unique(np.concatenate([np.linspace(0.0, top, EFFORT_GRID_POINTS),
                                               kinks[(kinks >= 0) & (kinks <= top)]]))

        values = self._effort_objective(law, contract, candidates)
        best = int(np.argmax(values))
        effort, value = float(candidates[best]), float(values[best])

        span = top / (EFFORT_GRID_POINTS - 1)
        lower, upper = max(effort - span, 0.0), min(effort + span, top)
        if upper > lower:
            result = optimize.minimize_scalar(lambda e: -float(self._effort_objective(law, contract, e)),
                                              bounds=(lower, upper), method='bounded',
                                              options={'xatol': 1e-12})
            if -result.fun > value + 1e-15:
                effort = float(result.x)
        return effort

    def price_contract(self, config: TwoPeriodConfig, base: float, penalty: float,
                       threshold: float) -> ContractSpec:
        """
        Contrato a precio justo: y1 = E[y2] bajo el esfuerzo de mejor respuesta

        Raises:
            ContractError: Si el contrato viola el tope y2 <= c
        """
        contract = ContractSpec(base=base, penalty=penalty, threshold=threshold)
        self._check_cap(contract, config)
        law = self.payment_law(config)
        effort = self.best_response_effort(config, contract)
        return contract.priced(self._expected_repayment(law, contract, effort))

    def _expected_repayment(self, law: PaymentLaw, contract: ContractSpec, effort: float) -> float:
        retained = contract.base - float(law.expected_shortfall(contract.base - effort))
        punished = contract.penalty * float(law.cdf(contract.threshold - effort, strict=True))
        return retained + punished

    @staticmethod
    def _check_cap(contract: ContractSpec, config: TwoPeriodConfig) -> None:
        if not contract.respects_cap(config.c):
            raise ContractError(
                f'El contrato paga hasta {contract.maximum_payment:.6g} > c={config.c:.6g} en algún estado'
            )

    def dollar_regime(self, config: TwoPeriodConfig,
                      contract: Optional[ContractSpec] = None) -> DollarRegimeResult:
        """
        Esfuerzo y utilidad del subastador en el régimen en dólares

        Sin contrato no hay inversión externa: e = 1 y la utilidad es
        k + beta·(k + 1/2). Con contrato se usa la mejor respuesta y
        k + y1 + beta·(k + e - E[y2] - e^2/2).

        Raises:
            ContractError: Si el contrato viola el tope y2 <= c
        """
        law = self.payment_law(config)
        k, beta = law.mean, config.beta
        if contract is None:
            return DollarRegimeResult(effort=1.0, utility=k + beta * (k + 0.5), investor_payoff=0.0)

        self._check_cap(contract, config)
        effort = self.best_response_effort(config, contract)
        repayment = self._expected_repayment(law, contract, effort)
        y1 = repayment if contract.y1 is None else contract.y1
        priced = contract.priced(y1)
        utility = k + y1 + beta * (k + effort - repayment - effort ** 2 / 2.0)
        return DollarRegimeResult(
            effort=effort,
            utility=utility,
            investor_payoff=repayment - y1,
            contract=priced
        )

    def first_best_utility(self, config: TwoPeriodConfig) -> float:
        """k + (k + 1) - beta/2: esfuerzo e = 1 con todo el periodo 2 vendido"""
        k = self.expected_payment(config)
        return 2.0 * k + 1.0 - config.beta / 2.0

    def _search_contracts(self, config: TwoPeriodConfig, thresholds: Sequence[float],
                          bases: Sequence[float], penalty_points: int,
                          penalty_range=None) -> Optional[DollarRegimeResult]:
        best = None
        for threshold in thresholds:
            for base in bases:
                room = config.c - min(threshold, base)
                if base > config.c + 1e-12 or room < -1e-12:
                    continue
                if penalty_range is None:
                    penalties = np.linspace(0.0, max(room, 0.0), penalty_points)
                else:
                    penalties = np.clip(np.linspace(*penalty_range, penalty_points), 0.0, max(room, 0.0))
                for penalty in np.unique(penalties):
                    contract = ContractSpec(base=float(base), penalty=float(penalty), threshold=float(threshold))
                    if not contract.respects_cap(config.c):
                        continue
                    result = self.dollar_regime(config, contract)
                    if best is None or result.utility > best.utility + 1e-15:
                        best = result
        return best

    def optimize_contract(self, config: TwoPeriodConfig) -> DollarRegimeResult:
        """
        Mejor contrato de la familia (base, castigo bajo umbral) con tope c

        Rejilla gruesa seguida de rondas de acercamiento alrededor del mejor
        contrato; el resultado es una cota inferior del valor del régimen en dólares.
        """
        dist = config.distribution
        best = self.dollar_regime(config, ContractSpec())
        if config.c <= 0:
            return best

        thresholds = np.linspace(dist.support_low, dist.support_high + 1.0, THRESHOLD_GRID_POINTS)
        bases = np.linspace(0.0, config.c, CONTRACT_GRID_POINTS)
        found = self._search_contracts(config, thresholds, bases, CONTRACT_GRID_POINTS)
        if found is not None and found.utility > best.utility:
            best = found

        threshold_step = thresholds[1] - thresholds[0]
        base_step = config.c / (CONTRACT_GRID_POINTS - 1)
        penalty_step = config.c / (CONTRACT_GRID_POINTS - 1)
        for _ in range(ZOOM_ROUNDS):
            if best.contract is None:
                break
            center = best.contract
            zoom_thresholds = np.linspace(center.threshold - threshold_step, center.threshold + threshold_step, 5)
            zoom_bases = np.clip(np.linspace(center.base - base_step, center.base + base_step, 5), 0.0, config.c)
            found = self._search_contracts(
                config, zoom_thresholds, np.unique(zoom_bases), 5,
                penalty_range=(center.penalty - penalty_step, center.penalty + penalty_step)
            )
            if found is not None and found.utility > best.utility:
                best = found
            threshold_step, base_step, penalty_step = threshold_step / 4, base_step / 4, penalty_step / 4
        return best

    def compare_regimes(self, config: TwoPeriodConfig, c_grid: Sequence[float]) -> RegimeComparison:
        """
        Barrido en c: utilidad óptima con dólares (sobre la familia de contratos)
        contra la utilidad óptima con tokens (sobre sigma)

        Los conjuntos factibles crecen con c, así que en cada c se conserva el
        mejor contrato encontrado en cualquier c menor.

        Raises:
            DomainError: Si la rejilla no está ordenada o tiene valores negativos
        """
        grid = [float(c) for c in c_grid]
        if not grid or any(c < 0 for c in grid) or any(b < a for a, b in zip(grid, grid[1:])):
            raise DomainError('c_grid debe ser no vacía, ordenada y no negativa')

        token = self.optimize_sigma(config)
        rows = []
        carried: Optional[DollarRegimeResult] = None
        crossing = None
        for c in grid:
            dollar = self.optimize_contract(config.with_c(c))
            if carried is not None and carried.utility > dollar.utility:
                dollar = carried
            carried = dollar
            if crossing is None and dollar.utility >= token.utility:
                crossing = c
            rows.append({
                'c': c,
                'dollar_utility': dollar.utility,
                'token_utility': token.utility,
                'sigma_star': token.sigma,
                'expected_alpha': token.expected_alpha,
                'effort': dollar.effort,
                'contract': None if dollar.contract is None else dollar.contract.to_dict()
            })
            logger.debug(f"c={c}: dólares {dollar.utility:.8f} vs tokens {token.utility:.8f}")

        comparison = RegimeComparison(rows=rows, token_optimum=token, crossing_c=crossing)
        logger.info(f"Comparación de regímenes completada: c* = {crossing}")
        return comparison
