from typing import Callable

LOG_FORMAT = "%(name)s: %(levelname)s: %(message)s"


def bracket_metavar(name: str) -> str:
    return "<{}>".format(name.lower())


class ArgumentConfig:
    """
    Behaviour of the `deadzone-pbc` front end.

    Attributes:
        - `show_default_in_help` (bool): append `(default: ...)` to option help. Default True.
        - `show_type_in_help` (bool): append the expected value type, e.g. `<float>`. Default True.
        - `metavar_transform` (Callable[[str], str]): renders metavars and the command placeholder.
                Default `bracket_metavar`, giving `<name>`.
        - `log_format` (str): format of the stderr log handler installed by `main`.
    """

    __slots__ = ("show_default_in_help", "show_type_in_help", "metavar_transform", "log_format")

    def __init__(
        self,
        *,
        show_default_in_help: bool = True,
        show_type_in_help: bool = True,
        metavar_transform: Callable[[str], str] = bracket_metavar,
        log_format: str = LOG_FORMAT,
    ) -> None:
        self.show_default_in_help = show_default_in_help
        self.show_type_in_help = show_type_in_help
        self.metavar_transform = metavar_transform
        self.log_format = log_format
