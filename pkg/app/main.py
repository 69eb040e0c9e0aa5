"""
Módulo de fábrica de aplicación Flask
Crea y configura la instancia de la aplicación que aloja los comandos de experimentos
Siguiendo el Patrón de Fábrica de Aplicación
"""
import os
import logging
from flask import Flask

# Cargar variables de entorno desde archivo .env si existe
try:
    from dotenv import load_dotenv
    load_dotenv()
    logging.getLogger(__name__).debug("✅ Archivo .env cargado correctamente")
except ImportError:
    logging.getLogger(__name__).debug("ℹ️  python-dotenv no está instalado, usando variables de entorno del sistema")
except Exception as e:
    logging.getLogger(__name__).warning(f"⚠️ Error al cargar .env: {str(e)}")

LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s'


def create_app(config_name='development'):
    """
    Función de fábrica de aplicación

    Crea y configura la aplicación Flask con:
    - Configuración basada en entorno
    - Configuración de logging
    - Registro de los comandos de experimentos

    Args:
        config_name (str): Nombre del ambiente de configuración ('development', 'testing', 'production')

    Returns:
        Flask: Instancia de aplicación Flask configurada
    """
    app = Flask(__name__)

    # Cargar configuración desde entorno
    app.config['OUTPUT_DIR'] = os.getenv('OUTPUT_DIR', 'artifacts')
    app.config['LOG_LEVEL'] = os.getenv('LOG_LEVEL', 'INFO').upper()
    app.config['DEFAULT_SEED'] = int(os.getenv('DEFAULT_SEED', '20211930'))
    app.config['DEFAULT_PATHS'] = int(os.getenv('DEFAULT_PATHS', '100000'))
    app.config['TESTING'] = config_name == 'testing'

    # Configurar logging
    configure_logging(app, config_name)

    # Registrar blueprints
    register_blueprints(app)

    logger = logging.getLogger(__name__)
    logger.info(f"Aplicación Flask inicializada con config: {config_name}")

    return app


def configure_logging(app: Flask, config_name: str) -> None:
    """
    Configurar el logging de la aplicación

    Un único manejador de consola para el logger de Flask y el del paquete
    `app`, donde escriben los servicios.

    Args:
        app (Flask): Instancia de la aplicación Flask
        config_name (str): Nombre del ambiente de configuración
    """
    level = logging.DEBUG if app.debug else getattr(logging, app.config['LOG_LEVEL'], logging.INFO)

    package_logger = logging.getLogger('app')
    for logger in (app.logger, package_logger):
        logger.setLevel(level)
        if not any(getattr(handler, '_experiment_console', False) for handler in logger.handlers):
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            console_handler._experiment_console = True
            logger.addHandler(console_handler)
        for handler in logger.handlers:
            handler.setLevel(level)

    app.logger.info(f'Aplicación iniciada en ambiente: {config_name}')


def register_blueprints(app: Flask) -> None:
    """
    Registrar los blueprints de la aplicación

    Args:
        app (Flask): Instancia de la aplicación Flask
    """
    from app.commands import experiment_commands

    app.register_blueprint(experiment_commands.experiment_bp)
