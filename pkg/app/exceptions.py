"""
Módulo de excepciones personalizadas
Define excepciones específicas del simulador siguiendo los principios de código limpio
"""
from typing import List, Optional


class AppException(Exception):
    """Excepción base para errores específicos de la aplicación"""
    exit_code = 3


class DomainError(AppException, ValueError):
    """Excepción lanzada cuando no se cumple una precondición del modelo"""
    exit_code = 2


class UnsupportedFormatError(DomainError):
    """Excepción lanzada cuando se pide un formato de subasta fuera de alcance"""
    pass


class LedgerError(DomainError):
    """Excepción lanzada cuando el libro de tokens viola la factibilidad"""
    pass


class ContractError(DomainError):
    """Excepción lanzada cuando un contrato viola el tope de apropiación indebida"""
    pass


class ConfigurationError(AppException):
    """Excepción lanzada cuando la configuración del escenario es inválida"""
    exit_code = 2

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        super().__init__(message)
        self.violations = violations or []


class NumericalError(AppException):
    """Excepción lanzada cuando un cálculo numérico falla"""
    exit_code = 3


class AcceptanceCheckError(AppException):
    """Excepción lanzada cuando una verificación de aceptación de un demo falla"""
    exit_code = 4
