"""
Layered run settings.

A value is looked up in ``os.environ`` first, then in the settings file found
next to the run (``swselect.ini`` with a ``[swselect]`` section, or a ``.env``
file), and finally falls back to the caller's default.
"""

from __future__ import annotations

import logging
import os
import string
from collections import OrderedDict
from configparser import ConfigParser
from configparser import NoOptionError
from configparser import NoSectionError
from pathlib import Path
from shlex import shlex
from typing import Any
from typing import Callable
from typing import Generic
from typing import TypeVar
from typing import overload

from .errors import UndefinedValueError

logger = logging.getLogger(__name__)

T = TypeVar('T')

DEFAULT_ENCODING = 'UTF-8'
PREFIX = 'SWSELECT_'

TRUE_VALUES = {'y', 'yes', 't', 'true', 'on', '1'}
FALSE_VALUES = {'n', 'no', 'f', 'false', 'off', '0'}


def strtobool(value: str | bool) -> bool:
    if isinstance(value, bool):
        return value

    value = value.lower()
    if value in TRUE_VALUES:
        return True
    elif value in FALSE_VALUES:
        return False

    raise ValueError(f'Invalid truth value: {value!r}')


def _cast_boolean(value: Any) -> bool:
    value = str(value)
    return bool(value) if value == '' else strtobool(value)


class Undefined:
    """
    Marker type for a setting without a default.
    """


undefined = Undefined()


class RepositoryEmpty:
    def __init__(
        self,
        source: str | Path = '',
        encoding: str = DEFAULT_ENCODING,
    ) -> None:
        self.source = source

    def __contains__(self, key: str) -> bool:
        return False

    def __getitem__(self, key: str) -> str:
        raise KeyError(key)


class RepositoryIni(RepositoryEmpty):
    """
    Reads keys from the ``[swselect]`` section of an .ini file.
    """

    SECTION = 'swselect'

    def __init__(self, source: str | Path, encoding: str = DEFAULT_ENCODING) -> None:
        super().__init__(source, encoding)
        self.parser = ConfigParser()
        # keys are matched case-sensitively, like environment variables
        self.parser.optionxform = str  # type: ignore[assignment,method-assign]
        with Path(source).open(encoding=encoding) as file_:
            self.parser.read_file(file_)

    def __contains__(self, key: str) -> bool:
        return self.parser.has_option(self.SECTION, key)

    def __getitem__(self, key: str) -> str:
        try:
            return self.parser.get(self.SECTION, key)
        except (NoOptionError, NoSectionError):
            raise KeyError(key)


class RepositoryEnv(RepositoryEmpty):
    """
    Reads ``KEY=value`` lines from a .env file.
    """

    def __init__(self, source: str | Path, encoding: str = DEFAULT_ENCODING) -> None:
        super().__init__(source, encoding)
        self.data: dict[str, str] = {}

        with Path(source).open(encoding=encoding) as file_:
            for line in file_:
                line = line.strip()
                if not line or line.startswith('#') or '=' not in line:
                    continue
                k, v = line.split('=', 1)
                k = k.strip()
                v = v.strip()
                if len(v) >= 2 and v[0] == v[-1] and v[0] in {"'", '"'}:
                    v = v[1:-1]
                self.data[k] = v

    def __contains__(self, key: str) -> bool:
        return key in self.data

    def __getitem__(self, key: str) -> str:
        return self.data[key]


class Config:
    """
    Resolves a setting from the environment, then from a repository.
    """

    def __init__(self, repository: RepositoryEmpty) -> None:
        self.repository = repository

    @overload
    def get(
        self,
        option: str,
        default: Undefined = ...,
        cast: Undefined = ...,
    ) -> str: ...

    @overload
    def get(self, option: str, default: T, cast: Undefined = ...) -> T | str: ...

    @overload
    def get(
        self,
        option: str,
        default: Any = ...,
        cast: Callable[[str], T] = ...,
    ) -> T: ...

    def get(
        self,
        option: str,
        default: Any = undefined,
        cast: Any = undefined,
    ) -> Any:
        """
        Return the value for option, cast if requested, or the default.

        A non-string default is returned as is; a string default goes
        through ``cast`` like any stored value.
        """
        if option in os.environ:
            value = os.environ[option]
        elif option in self.repository:
            value = self.repository[option]
        else:
            if isinstance(default, Undefined):
                msg = (
                    f'{option!r} not found. '
                    'Declare it as envvar or define a default value.'
                )
                raise UndefinedValueError(msg)
            if not isinstance(default, str):
                return default
            value = default

        if isinstance(cast, Undefined):
            return value
        if cast is bool:
            cast = _cast_boolean
        return cast(value)

    __call__ = get


class AutoConfig:
    """
    Finds the settings file and builds a Config on first use.

    Parameters
    ----------
    search_path : str, path, optional
        Directory to start searching from. Defaults to the working directory
        at the time of the first lookup.
    """

    SUPPORTED: dict[str, type[RepositoryEmpty]] = OrderedDict([  # noqa: RUF012
        ('swselect.ini', RepositoryIni),
        ('.env', RepositoryEnv),
    ])

    encoding = DEFAULT_ENCODING

    def __init__(self, search_path: str | Path | None = None) -> None:
        self.search_path = search_path
        self.config: Config | None = None

    def _find_file(self, path: Path) -> Path | None:
        for config_file in self.SUPPORTED:
            file_path = path / config_file
            if file_path.is_file():
                return file_path

        parent = path.parent
        if parent == path:
            return None
        return self._find_file(parent)

    def _load(self, path: str | Path) -> None:
        try:
            filename = self._find_file(Path(path).resolve())
        except OSError:
            filename = None

        if filename is None:
            self.config = Config(RepositoryEmpty())
            return
        logger.debug('Reading settings from %s', filename)
        repository = self.SUPPORTED[filename.name]
        self.config = Config(repository(filename, encoding=self.encoding))

    def reset(self) -> None:
        self.config = None

    def __call__(self, option: str, default: Any = undefined, cast: Any = undefined) -> Any:
        if self.config is None:
            self._load(self.search_path or Path.cwd())

        assert self.config is not None, 'Config not loaded'
        return self.config.get(option, default=default, cast=cast)


config = AutoConfig()


class Csv(Generic[T]):
    """
    Parses a delimited setting into a list of cast items.
    """

    def __init__(
        self,
        cast: Callable[[str], T] = str,  # type: ignore[assignment]
        delimiter: str = ',',
        strip: str = string.whitespace,
    ) -> None:
        self.cast = cast
        self.delimiter = delimiter
        self.strip = strip

    def __call__(self, value: str | None) -> list[T]:
        if value is None:
            return []

        splitter = shlex(value, posix=True)
        splitter.whitespace = self.delimiter
        splitter.whitespace_split = True
        return [self.cast(s.strip(self.strip)) for s in splitter]


class Choices(Generic[T]):
    """
    Casts a setting and checks it against a list of valid values.
    """

    def __init__(
        self,
        flat: list[T],
        cast: Callable[[str], T] = str,  # type: ignore[assignment]
    ) -> None:
        self.flat = list(flat)
        self.cast = cast

    def __call__(self, value: str) -> T:
        transform = self.cast(value)
        if transform in self.flat:
            return transform

        raise ValueError(f'Value not in list: {value!r}; valid values are {self.flat!r}')


def setting(name: str, default: Any = undefined, cast: Any = undefined) -> Any:
    """Look up ``SWSELECT_<NAME>`` through the module-level AutoConfig."""
    return config(PREFIX + name.upper(), default=default, cast=cast)
