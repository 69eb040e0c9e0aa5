"""
Punto de entrada de la aplicación
Expone los comandos de experimentos: python run.py <subcomando> --config escenario.yaml
"""
import os

from flask.cli import FlaskGroup

from app.main import create_app


def build_app():
    return create_app(os.getenv('APP_ENV', 'production'))


cli = FlaskGroup(create_app=build_app, add_default_commands=False, load_dotenv=True,
                 help='Simulador de subastas liquidadas en dólares o en tokens')


if __name__ == '__main__':
    cli()
