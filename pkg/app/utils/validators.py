"""
Módulo de validadores
Contiene la validación del archivo de escenario con mensajes por campo
"""
import math
import os
from numbers import Real
from typing import Any, Dict, List

import yaml

from app.exceptions import ConfigurationError

TOP_LEVEL_KEYS = {'name', 'distribution', 'n', 'T', 'beta', 'M1', 'policy', 'utility',
                  'mc', 'regimes', 'output', 'extension'}
REQUIRED_KEYS = ('distribution', 'n', 'T', 'beta')
DISTRIBUTION_KEYS = {'kind', 'low', 'high', 'atoms'}
POLICY_KEYS = {'tau', 'sigma'}
UTILITY_KEYS = {'kind', 'gamma', 'w1', 'savings_rules'}
MC_KEYS = {'paths', 'seed', 'tolerance_sigmas'}
OUTPUT_KEYS = {'dir', 'prefix', 'format'}
EXTENSION_KEYS = {'distribution', 'n', 'beta', 'c_grid', 'sigma_grid_points'}

UTILITY_KINDS = ('risk-neutral', 'log', 'crra')
SAVINGS_RULES = ('consume-income', 'smooth-to-expected')
REGIMES = ('dollars', 'tokens', 'equity')
OUTPUT_FORMATS = ('csv', 'json')
MAX_SEED = 2 ** 64 - 1


def load_scenario(path: str) -> Dict[str, Any]:
    """
    Leer el archivo YAML del escenario

    Raises:
        ConfigurationError: Si el archivo no existe, no se puede leer o no es un mapeo
    """
    if not path or not os.path.isfile(path):
        raise ConfigurationError(f'No se encontró el archivo de configuración: {path}')
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            raw = yaml.safe_load(handle)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError(f'No se pudo leer la configuración {path}: {str(e)}')
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError('La configuración debe ser un mapeo clave-valor')
    return raw


def _is_number(value) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool) and math.isfinite(value)


def _is_integer(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _unknown_keys(section: Dict, allowed: set, prefix: str) -> List[str]:
    return [f'{prefix}{key}: clave desconocida' for key in sorted(map(str, section)) if key not in allowed]


def _mapping(raw: Dict, key: str, violations: List[str]) -> Dict:
    section = raw.get(key)
    if section is None:
        return {}
    if not isinstance(section, dict):
        violations.append(f'{key}: debe ser un mapeo')
        return {}
    return section


def validate_distribution(spec: Any, prefix: str = 'distribution') -> List[str]:
    """Validar la sección de distribución (uniforme o rejilla discreta)"""
    if not isinstance(spec, dict):
        return [f'{prefix}: debe ser un mapeo con kind']
    violations = _unknown_keys(spec, DISTRIBUTION_KEYS, f'{prefix}.')
    kind = spec.get('kind')
    low, high = spec.get('low'), spec.get('high')

    for name, value in (('low', low), ('high', high)):
        if value is not None and not _is_number(value):
            violations.append(f'{prefix}.{name}: debe ser un número finito')
    if _is_number(low) and low < 0:
        violations.append(f'{prefix}.low: debe ser >= 0')
    if _is_number(low) and _is_number(high) and high < low:
        violations.append(f'{prefix}.high: debe ser >= low')

    if kind == 'uniform':
        if low is None or high is None:
            violations.append(f'{prefix}: la uniforme requiere low y high')
    elif kind in ('discrete', 'discrete-grid'):
        atoms = spec.get('atoms')
        if not isinstance(atoms, list) or not atoms:
            violations.append(f'{prefix}.atoms: se requiere una lista no vacía de pares [valor, probabilidad]')
        else:
            total = 0.0
            for index, atom in enumerate(atoms):
                if not (isinstance(atom, (list, tuple)) and len(atom) == 2
                        and _is_number(atom[0]) and _is_number(atom[1])):
                    violations.append(f'{prefix}.atoms[{index}]: debe ser un par [valor, probabilidad]')
                    continue
                value, prob = atom
                if prob < 0:
                    violations.append(f'{prefix}.atoms[{index}]: probabilidad negativa')
                if value < 0:
                    violations.append(f'{prefix}.atoms[{index}]: valor negativo')
                if (_is_number(low) and value < low) or (_is_number(high) and value > high):
                    violations.append(f'{prefix}.atoms[{index}]: valor fuera del soporte')
                total += prob
            if abs(total - 1.0) > 1e-12:
                violations.append(f'{prefix}.atoms: las probabilidades suman {total!r}, deben sumar 1')
    else:
        violations.append(f'{prefix}.kind: debe ser uniform o discrete')
    return violations


def _support_low(spec: Any):
    if not isinstance(spec, dict):
        return None
    if _is_number(spec.get('low')):
        return spec['low']
    atoms = spec.get('atoms')
    if isinstance(atoms, list):
        values = [atom[0] for atom in atoms
                  if isinstance(atom, (list, tuple)) and len(atom) == 2 and _is_number(atom[0])]
        return min(values) if values else None
    return None


def _validate_policy(raw: Dict, horizon, violations: List[str]) -> None:
    policy = _mapping(raw, 'policy', violations)
    violations.extend(_unknown_keys(policy, POLICY_KEYS, 'policy.'))
    for name in ('tau', 'sigma'):
        vector = policy.get(name)
        if vector is None:
            continue
        if not isinstance(vector, list):
            violations.append(f'policy.{name}: debe ser una lista')
            continue
        if _is_integer(horizon) and len(vector) != horizon:
            violations.append(f'policy.{name}: longitud {len(vector)} distinta de T={horizon}')
        for index, value in enumerate(vector):
            if not _is_number(value):
                violations.append(f'policy.{name}[{index}]: debe ser un número')
            elif value < -1:
                violations.append(f'policy.{name}[{index}]={value}: {name} below -1')


def _validate_utility(raw: Dict, violations: List[str]) -> None:
    utility = _mapping(raw, 'utility', violations)
    violations.extend(_unknown_keys(utility, UTILITY_KEYS, 'utility.'))
    kind = utility.get('kind', 'risk-neutral')
    if kind not in UTILITY_KINDS:
        violations.append(f'utility.kind: debe ser uno de {", ".join(UTILITY_KINDS)}')
    gamma = utility.get('gamma')
    if kind == 'crra' and not (_is_number(gamma) and gamma > 0 and gamma != 1):
        violations.append('utility.gamma: CRRA requiere gamma > 0 y gamma != 1')
    w1 = utility.get('w1', 0.0)
    if not _is_number(w1) or w1 < 0:
        violations.append('utility.w1: debe ser un número >= 0')
    elif kind in ('log', 'crra'):
        low = _support_low(raw.get('distribution'))
        if w1 <= 0 and (low is None or low <= 0):
            violations.append('utility.w1: la utilidad log/CRRA requiere w1 > 0 o v_low > 0 para consumir en positivo')
    rules = utility.get('savings_rules')
    if rules is not None:
        if not isinstance(rules, list) or not rules:
            violations.append('utility.savings_rules: debe ser una lista no vacía')
        else:
            for rule in rules:
                if rule not in SAVINGS_RULES:
                    violations.append(f'utility.savings_rules: regla desconocida {rule}')


def _validate_mc(raw: Dict, violations: List[str]) -> None:
    mc = _mapping(raw, 'mc', violations)
    violations.extend(_unknown_keys(mc, MC_KEYS, 'mc.'))
    if 'paths' in mc and not (_is_integer(mc['paths']) and mc['paths'] >= 1):
        violations.append('mc.paths: debe ser un entero >= 1')
    if 'seed' in mc and not (_is_integer(mc['seed']) and 0 <= mc['seed'] <= MAX_SEED):
        violations.append('mc.seed: debe ser un entero sin signo de 64 bits')
    if 'tolerance_sigmas' in mc and not (_is_number(mc['tolerance_sigmas']) and mc['tolerance_sigmas'] > 0):
        violations.append('mc.tolerance_sigmas: debe ser positivo')


def _validate_output(raw: Dict, violations: List[str]) -> None:
    output = _mapping(raw, 'output', violations)
    violations.extend(_unknown_keys(output, OUTPUT_KEYS, 'output.'))
    if 'format' in output and output['format'] not in OUTPUT_FORMATS:
        violations.append('output.format: debe ser csv o json')
    for key in ('dir', 'prefix'):
        if key in output and not (isinstance(output[key], str) and output[key]):
            violations.append(f'output.{key}: debe ser un texto no vacío')


def _validate_extension(raw: Dict, violations: List[str]) -> None:
    extension = _mapping(raw, 'extension', violations)
    violations.extend(_unknown_keys(extension, EXTENSION_KEYS, 'extension.'))
    if 'distribution' in extension:
        found = validate_distribution(extension['distribution'], 'extension.distribution')
        violations.extend(found)
        low = _support_low(extension['distribution'])
        if not found and (low is None or low <= 0):
            violations.append('extension.distribution.low: la extensión requiere v_low > 0')
    if 'n' in extension and not (_is_integer(extension['n']) and extension['n'] >= 2):
        violations.append('extension.n: debe ser un entero >= 2')
    if 'beta' in extension and not (_is_number(extension['beta']) and 0 < extension['beta'] <= 1):
        violations.append('extension.beta: debe estar en (0, 1]')
    if 'sigma_grid_points' in extension and not (
            _is_integer(extension['sigma_grid_points']) and extension['sigma_grid_points'] >= 3):
        violations.append('extension.sigma_grid_points: debe ser un entero >= 3')
    grid = extension.get('c_grid')
    if grid is not None:
        if not isinstance(grid, list) or not grid or not all(_is_number(c) for c in grid):
            violations.append('extension.c_grid: debe ser una lista no vacía de números')
        elif any(c < 0 for c in grid) or any(b < a for a, b in zip(grid, grid[1:])):
            violations.append('extension.c_grid: debe estar ordenada y ser no negativa')


def validate_scenario(raw: Dict[str, Any]) -> List[str]:
    """
    Validar el escenario completo

    Args:
        raw (dict): Contenido del YAML con las sobrescrituras aplicadas

    Returns:
        list: Violaciones por campo; vacía si el escenario se puede ejecutar
    """
    if not isinstance(raw, dict):
        return ['La configuración debe ser un mapeo clave-valor']

    violations = _unknown_keys(raw, TOP_LEVEL_KEYS, '')
    for key in REQUIRED_KEYS:
        if key not in raw:
            violations.append(f'{key}: campo requerido faltante')

    if 'distribution' in raw:
        violations.extend(validate_distribution(raw['distribution']))
    n, horizon, beta = raw.get('n'), raw.get('T'), raw.get('beta')
    if n is not None and not (_is_integer(n) and n >= 2):
        violations.append('n: debe ser un entero >= 2')
    if horizon is not None and not (_is_integer(horizon) and horizon >= 1):
        violations.append('T: debe ser un entero >= 1')
    if beta is not None and not (_is_number(beta) and 0 < beta < 1):
        violations.append('beta: debe estar en (0, 1)')
    if 'M1' in raw and not (_is_number(raw['M1']) and raw['M1'] > 0):
        violations.append('M1: debe ser positivo')
    if 'name' in raw and not isinstance(raw['name'], str):
        violations.append('name: debe ser un texto')

    regimes = raw.get('regimes')
    if regimes is not None:
        if not isinstance(regimes, list) or not regimes:
            violations.append('regimes: debe ser una lista no vacía')
        else:
            violations.extend(f'regimes: régimen desconocido {regime}' for regime in regimes
                              if regime not in REGIMES)

    _validate_policy(raw, horizon, violations)
    _validate_utility(raw, violations)
    _validate_mc(raw, violations)
    _validate_output(raw, violations)
    _validate_extension(raw, violations)
    return violations
