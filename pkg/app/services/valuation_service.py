"""
Módulo de servicio de valoraciones
Estadísticos de orden de la distribución F(v): k, g y la ley del pago total
"""
import logging
from typing import Optional

import numpy as np
from scipy import integrate

from app.exceptions import DomainError
from app.models.valuation import MonteCarloEstimate, PaymentLaw, ValuationDistribution

logger = logging.getLogger(__name__)

QUADRATURE_TOLERANCE = 1e-12
REGULARITY_GRID_POINTS = 2001
PANEL_CHUNK = 65536


class ValuationService:
    """Servicio para las cantidades estáticas del modelo de valoraciones privadas"""

    def sample_valuations(self, dist: ValuationDistribution, n: int,
                          rng: np.random.Generator, size=None) -> np.ndarray:
        """
        Extraer n valoraciones i.i.d. de la distribución

        Args:
            dist (ValuationDistribution): Ley de las valoraciones
            n (int): Número de postores (n >= 2)
            rng (np.random.Generator): Flujo aleatorio con semilla explícita
            size: Forma de lote opcional; el resultado tiene forma (*size, n)

        Returns:
            np.ndarray: Valoraciones simuladas

        Raises:
            DomainError: Si n < 2
        """
        self._require_bidders(n)
        shape = (n,) if size is None else tuple(np.atleast_1d(size)) + (n,)
        if dist.is_continuous:
            return rng.uniform(dist.support_low, dist.support_high, size=shape)
        return rng.choice(dist.values, size=shape, p=dist.probabilities)

    def draw_valuation_panel(self, dist: ValuationDistribution, n: int, horizon: int,
                             paths: int, seed: int) -> np.ndarray:
        """
        Panel de valoraciones de forma (paths, T, n) con números aleatorios comunes

        Cada bloque de PANEL_CHUNK trayectorias usa su propio subflujo
        SeedSequence(seed).spawn, de modo que la trayectoria i recibe siempre
        las mismas valoraciones para una semilla dada, sin importar el régimen.
        """
        self._require_bidders(n)
        if paths < 1 or horizon < 1:
            raise DomainError('Se requieren paths >= 1 y T >= 1')
        chunks = -(-paths // PANEL_CHUNK)
        streams = np.random.SeedSequence(seed).spawn(chunks)
        blocks = []
        for index, stream in enumerate(streams):
            size = min(PANEL_CHUNK, paths - index * PANEL_CHUNK)
            blocks.append(self.sample_valuations(dist, n, np.random.default_rng(stream), size=(size, horizon)))
        return np.concatenate(blocks, axis=0)

    def total_payment_distribution(self, dist: ValuationDistribution, n: int) -> PaymentLaw:
        """
        Ley del pago total B_t (segundo estadístico de orden) de la subasta de segundo precio

        Para rejillas discretas se calcula la función de masa exacta con
        P(B <= x) = F(x)^n + n·F(x)^(n-1)·(1 - F(x)).
        """
        self._require_bidders(n)
        if dist.is_continuous:
            return PaymentLaw(n=n, low=dist.support_low, high=dist.support_high)

        values = dist.values
        cumulative = np.cumsum(dist.probabilities)
        cumulative[-1] = 1.0
        at_most = cumulative ** n + n * cumulative ** (n - 1) * (1.0 - cumulative)
        probabilities = np.diff(np.concatenate(([0.0], at_most)))
        keep = probabilities > 0
        return PaymentLaw(
            n=n,
            low=dist.support_low,
            high=dist.support_high,
            values=values[keep],
            probabilities=probabilities[keep] / probabilities[keep].sum()
        )

    def expected_second_highest(self, dist: ValuationDistribution, n: int) -> float:
        """
        k = E[v_(Max-1)], el pago esperado por periodo en la subasta de segundo precio

        Suma exacta para rejillas discretas; cuadratura adaptativa sobre la
        densidad del estadístico de orden para la uniforme.
        """
        law = self.total_payment_distribution(dist, n)
        if law.is_discrete:
            return law.mean

        def integrand(x):
            return x * law.pdf(x)

        value, error = integrate.quad(integrand, law.low, law.high,
                                      epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE)
        logger.debug(f"k por cuadratura = {value:.12f} (error estimado {error:.1e})")
        return float(value)

    def expected_highest(self, dist: ValuationDistribution, n: int) -> float:
        """E[v_Max], con P(v_Max <= x) = F(x)^n"""
        self._require_bidders(n)
        if not dist.is_continuous:
            cumulative = np.cumsum(dist.probabilities)
            cumulative[-1] = 1.0
            masses = np.diff(np.concatenate(([0.0], cumulative ** n)))
            return float(np.dot(dist.values, masses))

        # E[X] = v_high - integral de F_max(x) sobre el soporte
        value, _ = integrate.quad(lambda x: float(dist.cdf(x)) ** n,
                                  dist.support_low, dist.support_high,
                                  epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE)
        return float(dist.support_high - value)

    def expected_bidder_surplus(self, dist: ValuationDistribution, n: int) -> float:
        """
        g = E[max{v_i - v_(Max-1), 0}], el excedente esperado de cada postor

        Solo el postor con la valoración más alta obtiene excedente positivo, por lo
        que n·g = E[v_Max] - k.
        """
        surplus = (self.expected_highest(dist, n) - self.expected_second_highest(dist, n)) / n
        return max(surplus, 0.0)

    def regularity_check(self, dist: ValuationDistribution) -> bool:
        """
        Verificar v·f(v) >= 1 - F(v) en el soporte

        Para rejillas discretas se usa el análogo del valor virtual:
        v_j - (v_(j+1) - v_j)·P(V > v_j)/p_j >= 0. Es solo un diagnóstico.
        """
        if not dist.is_continuous:
            values, probabilities = dist.values, dist.probabilities
            survival = 1.0 - np.cumsum(probabilities)
            steps = np.diff(np.append(values, values[-1]))
            virtual = values - steps * np.clip(survival, 0.0, None) / probabilities
            regular = bool(np.all(virtual >= -1e-12))
        else:
            grid = np.linspace(dist.support_low, dist.support_high, REGULARITY_GRID_POINTS)
            regular = bool(np.all(grid * dist.pdf(grid) >= 1.0 - dist.cdf(grid) - 1e-12))

        if not regular:
            logger.warning(
                f"⚠️ La distribución {dist.kind} en [{dist.support_low}, {dist.support_high}] no cumple "
                f"v·f(v) >= 1 - F(v); la reserva v_low puede no ser óptima"
            )
        return regular

    def monte_carlo_order_statistics(self, dist: ValuationDistribution, n: int,
                                     paths: int, rng: np.random.Generator,
                                     batch: int = 1_000_000) -> tuple:
        """
        Estimaciones Monte Carlo de (k, g) usadas como oráculo de la cuadratura

        Returns:
            tuple: (MonteCarloEstimate de k, MonteCarloEstimate de g)
        """
        second, surplus = [], []
        remaining = paths
        while remaining > 0:
            size = min(batch, remaining)
            draws = np.sort(self.sample_valuations(dist, n, rng, size=size), axis=-1)
            second.append(draws[:, -2])
            surplus.append((draws[:, -1] - draws[:, -2]) / n)
            remaining -= size
        return (MonteCarloEstimate.from_samples(np.concatenate(second)),
                MonteCarloEstimate.from_samples(np.concatenate(surplus)))

    def _require_bidders(self, n: Optional[int]) -> None:
        if n is None or n < 2:
            raise DomainError(f'El modelo requiere n >= 2 postores, se recibió n={n}')
