"""
Módulo controlador de experimentos
Comandos de línea de órdenes para resolver, simular y comparar escenarios
Cada comando traduce las excepciones del dominio a códigos de salida
"""
import json
import logging
from typing import Any, Callable, Dict

import click
from flask import Blueprint, current_app

from app.exceptions import (AcceptanceCheckError, AppException, ConfigurationError, DomainError,
                            NumericalError)
from app.services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)

experiment_bp = Blueprint('experiments', __name__, cli_group=None)
experiment_service = ExperimentService()

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_ACCEPTANCE = 4


def scenario_options(command: Callable) -> Callable:
    """Opciones comunes: --config, --seed, --paths, --out y --format"""
    options = [
        click.option('--config', 'config_path', required=True, type=click.Path(dir_okay=False),
                     help='Ruta del escenario YAML'),
        click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None,
                     help='Semilla (entero sin signo de 64 bits)'),
        click.option('--paths', type=click.IntRange(min=1), default=None, help='Número de trayectorias'),
        click.option('--out', type=click.Path(file_okay=False), default=None, help='Carpeta de salida'),
        click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default=None,
                     help='Formato de los artefactos'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _defaults() -> Dict[str, Any]:
    return {
        'seed': current_app.config['DEFAULT_SEED'],
        'paths': current_app.config['DEFAULT_PATHS'],
        'output_dir': current_app.config['OUTPUT_DIR'],
    }


def _execute(runner: str, config_path: str, seed, paths, out, fmt) -> None:
    """
    Cargar el escenario, ejecutar el subcomando y terminar con el código de salida

    Códigos de salida:
        - 0: Éxito
        - 2: Configuración inválida o precondición del modelo
        - 3: Falla numérica
        - 4: Falla de una verificación de aceptación
    """
    overrides = {'seed': seed, 'paths': paths, 'out': out, 'format': fmt}
    ctx = click.get_current_context()
    try:
        scenario = experiment_service.load(config_path, overrides, _defaults())
        result = getattr(experiment_service, runner)(scenario)
        click.echo(json.dumps(result, indent=2, default=str))

    except ConfigurationError as e:
        logger.warning(f"Configuración inválida: {str(e)}")
        click.echo(f'Error de configuración: {str(e)}', err=True)
        for violation in e.violations:
            click.echo(f'  - {violation}', err=True)
        ctx.exit(EXIT_CONFIG)

    except DomainError as e:
        logger.warning(f"Precondición no cumplida: {str(e)}")
        click.echo(f'Error de dominio: {str(e)}', err=True)
        ctx.exit(EXIT_CONFIG)

    except AcceptanceCheckError as e:
        click.echo(f'Verificación fallida: {str(e)}', err=True)
        ctx.exit(EXIT_ACCEPTANCE)

    except (NumericalError, AppException, ArithmeticError) as e:
        logger.error(f"Falla numérica: {str(e)}", exc_info=True)
        click.echo(f'Falla numérica: {str(e)}', err=True)
        ctx.exit(EXIT_NUMERIC)

    except Exception as e:
        logger.error(f"Error inesperado en {runner}: {str(e)}", exc_info=True)
        click.echo(f'Error inesperado: {str(e)}', err=True)
        ctx.exit(EXIT_NUMERIC)


@experiment_bp.cli.command('solve')
@scenario_options
def solve(config_path, seed, paths, out, fmt):
    """Resolver el perfil de equilibrio P_t (t, P_t, speculation_prob)"""
    _execute('run_solve', config_path, seed, paths, out, fmt)


@experiment_bp.cli.command('simulate')
@scenario_options
def simulate(config_path, seed, paths, out, fmt):
    """Simular trazas por régimen (dollars, tokens, equity)"""
    _execute('run_simulate', config_path, seed, paths, out, fmt)


@experiment_bp.cli.command('compare-formats')
@scenario_options
def compare_formats(config_path, seed, paths, out, fmt):
    """Comparar el ingreso esperado de primer y segundo precio"""
    _execute('run_compare_formats', config_path, seed, paths, out, fmt)


@experiment_bp.cli.command('burn-demo')
@scenario_options
def burn_demo(config_path, seed, paths, out, fmt):
    """Verificar la identidad de ingresos con quema total de tokens"""
    _execute('run_burn_demo', config_path, seed, paths, out, fmt)


@experiment_bp.cli.command('corollary')
@scenario_options
def corollary(config_path, seed, paths, out, fmt):
    """Comparar la utilidad con quema de tokens contra la subasta en dólares"""
    _execute('run_corollary', config_path, seed, paths, out, fmt)


@experiment_bp.cli.command('extension')
@scenario_options
def extension(config_path, seed, paths, out, fmt):
    """Barrido en c de la extensión con esfuerzo (dólares vs. tokens)"""
    _execute('run_extension', config_path, seed, paths, out, fmt)


@experiment_bp.cli.command('validate', help='Listar las violaciones del escenario')
@scenario_options
def validate(config_path, seed, paths, out, fmt):
    """
    Validar el escenario sin ejecutarlo

    Imprime una violación por línea; sale con 0 si la lista está vacía y con
    2 si hay violaciones o el archivo no se puede leer.
    """
    ctx = click.get_current_context()
    overrides = {'seed': seed, 'paths': paths, 'out': out, 'format': fmt}
    try:
        violations = experiment_service.validate(config_path, overrides)
    except ConfigurationError as e:
        click.echo(f'Error de configuración: {str(e)}', err=True)
        ctx.exit(EXIT_CONFIG)

    if violations:
        for violation in violations:
            click.echo(violation)
        ctx.exit(EXIT_CONFIG)
    click.echo('OK: el escenario es válido')
