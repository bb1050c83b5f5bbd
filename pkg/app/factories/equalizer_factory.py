"""Factory for creating spatial equalizer instances.

This module provides the EqualizerFactory class for registering and instantiating
the linear detectors used by the link runner.
"""

from typing import Any

from app.core.exceptions import ConfigError


class EqualizerFactory:
    """Factory class for registering and creating equalizer instances.

    This class allows registration of equalizer classes under a specific name
    and provides a method to instantiate them with given parameters.
    """

    _registry = {}

    @classmethod
    def register(cls, name: str):
        """Register an equalizer class under a specific name.

        Args:
            name (str): The name to register the equalizer class under.

        Returns:
            Callable: A decorator that registers the equalizer class.
        """

        def inner(equalizer_class):
            cls._registry[name] = equalizer_class
            return equalizer_class

        return inner

    @classmethod
    def available(cls) -> list[str]:
        """Names of all registered equalizers."""
        return sorted(cls._registry)

    @classmethod
    def create(cls, name: str, **kwargs) -> Any:
        """Create an instance of a registered equalizer.

        Args:
            name (str): The name of the registered equalizer to instantiate.
            **kwargs: Additional keyword arguments to pass to the equalizer constructor.

        Returns:
            Any: An instance of the requested equalizer.

        Raises:
            ConfigError: If the specified name is not registered.
        """
        if name not in cls._registry:
            raise ConfigError(f"Equalizer '{name}' is not registered.", available=", ".join(cls.available()))
        return cls._registry[name](**kwargs)
