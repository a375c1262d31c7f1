"""
Timing decorator for the expensive reconstruction and simulation steps.
"""

import functools
import inspect
import time
from typing import Any, Callable, Optional, TypeVar, Union, cast

F = TypeVar("F", bound=Callable[..., Any])


def measure_time(
    func: Optional[F] = None, *, logger_instance: Optional[Any] = None, level: str = "DEBUG"
) -> Union[Callable[[F], F], F]:
    """
    Decorator that measures the wall-clock time of a call.

    The elapsed time of the most recent call is stored on the wrapper as ``last_elapsed`` so the
    pipeline can report it. When a logger is given the time is also logged, together with the
    location of the function.

    Args:
        func: The function to be measured
        logger_instance: Optional loguru logger; without it nothing is logged
        level: Log level used for the timing message

    Returns:
        The wrapped function

    Examples:
        from loguru import logger

        @measure_time(logger_instance=logger)
        def build():
            ...
    """

    def decorator(fn: F) -> F:
        @functools.wraps(fn)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start_time = time.perf_counter()
            try:
                return fn(*args, **kwargs)
            finally:
                elapsed = time.perf_counter() - start_time
                wrapper.last_elapsed = elapsed

                if logger_instance is not None:
                    try:
                        location = inspect.getfile(fn)
                    except TypeError:
                        location = fn.__module__
                    message = f"Function '{location}:{fn.__qualname__}' executed in {elapsed:.6f} seconds"
                    logger_instance.log(level, message)

        wrapper.last_elapsed = None
        return cast(F, wrapper)

    if func is not None:
        return decorator(func)
    return decorator
