"""
Módulo de servicio de artefactos
Escribe reportes CSV/JSON con la procedencia completa (hash de configuración, semilla y versiones)
"""
import hashlib
import json
import logging
import os
from datetime import datetime, timezone
from importlib import metadata
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from werkzeug.utils import secure_filename

from app import __version__

logger = logging.getLogger(__name__)

CSV = 'csv'
JSON = 'json'
FLOAT_FORMAT = '%.17g'
TRACKED_PACKAGES = ('numpy', 'scipy', 'pandas', 'PyYAML', 'Flask')


def config_hash(raw: Dict[str, Any]) -> str:
    """SHA-256 del escenario serializado con claves ordenadas"""
    canonical = json.dumps(raw, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def module_versions() -> Dict[str, str]:
    """Versiones del paquete y de las dependencias numéricas instaladas"""
    versions = {'token-auction-lab': __version__}
    for package in TRACKED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = 'unknown'
    return versions


def _to_builtin(value):
    if isinstance(value, dict):
        return {str(key): _to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(item) for item in value]
    if isinstance(value, pd.DataFrame):
        return value.to_dict('records')
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, 'to_dict'):
        return _to_builtin(value.to_dict())
    return value


class ArtifactService:
    """Servicio para escribir artefactos de experimentos con procedencia"""

    def __init__(self, output_dir: Optional[str] = None):
        """
        Inicializar ArtifactService

        Args:
            output_dir (str): Carpeta de salida. Por defecto OUTPUT_DIR o 'artifacts'
        """
        self.output_dir = output_dir or os.getenv('OUTPUT_DIR', 'artifacts')
        self._ensure_output_dir()

    def _ensure_output_dir(self) -> None:
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)
            logger.info(f"Carpeta de artefactos creada: {self.output_dir}")

    def _path(self, prefix: str, kind: str, extension: str) -> str:
        filename = secure_filename(f'{prefix}_{kind}.{extension}')
        if not filename:
            raise ValueError('Nombre de artefacto inválido')
        return os.path.join(self.output_dir, filename)

    def header_lines(self, raw_config: Dict[str, Any], seed: int) -> list:
        """Líneas de cabecera; solo la primera (marca de tiempo) cambia entre corridas"""
        generated_at = datetime.now(timezone.utc).isoformat(timespec='seconds')
        return [
            f'# generated_at={generated_at}',
            f'# config_hash={config_hash(raw_config)}',
            f'# seed={seed}',
            f'# versions={json.dumps(module_versions(), sort_keys=True)}',
        ]

    def write_frame(self, frame: pd.DataFrame, prefix: str, kind: str,
                    raw_config: Dict[str, Any], seed: int, fmt: str = CSV) -> str:
        """
        Escribir una tabla como CSV (17 dígitos significativos) o JSON

        Returns:
            str: Ruta del archivo escrito
        """
        if fmt == JSON:
            return self.write_json({'rows': frame.to_dict('records')}, prefix, kind, raw_config, seed)
        if fmt != CSV:
            raise ValueError(f'Formato de salida no soportado: {fmt}')

        path = self._path(prefix, kind, CSV)
        with open(path, 'w', newline='') as handle:
            handle.write('\n'.join(self.header_lines(raw_config, seed)) + '\n')
            frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"Artefacto escrito: {path} ({len(frame)} filas)")
        return path

    def write_json(self, payload: Dict[str, Any], prefix: str, kind: str,
                   raw_config: Dict[str, Any], seed: int) -> str:
        """Escribir un reporte JSON con la procedencia en la clave `metadata`"""
        path = self._path(prefix, kind, JSON)
        metadata_block = {
            line[2:].split('=', 1)[0]: line[2:].split('=', 1)[1]
            for line in self.header_lines(raw_config, seed)
        }
        document = {'metadata': metadata_block, 'data': _to_builtin(payload)}
        with open(path, 'w') as handle:
            json.dump(document, handle, indent=2, sort_keys=True, allow_nan=True)
        logger.info(f"Artefacto escrito: {path}")
        return path
