from __future__ import annotations

from argparse import ArgumentParser, Namespace, RawDescriptionHelpFormatter
from copy import deepcopy
from typing import TYPE_CHECKING, Any, Dict, Optional, Sequence, Set, Union

from typing_extensions import get_type_hints

import deadzone_pbc.cli.fields as fields

from ..exceptions import ArgumentError, ValidationError
from ..utils import qualified_name
from .config import ArgumentConfig

# Internal keys
_PROGRAM = "__program__"
_VERSION = "__version__"
_COMMAND = "command"


class ArgumentClass:
    """
    Base class for a typed command-line interface.

    Subclasses declare arguments as annotated class variables built with `argfield`; a variable
    annotated with another `ArgumentClass` subclass is a subcommand. After `parse()` every field
    holds its converted and validated value, `command` names the chosen subcommand and the
    subcommand attribute holds the parsed subcommand instance (the others are None).

    Example Usage:
    ```
    class Simulate(ArgumentClass):
        scenarios: List[Path] = argfield(help="scenario documents")
        dt: Optional[float] = argfield(help="integration step")

    class CLI(ArgumentClass):
        verbose: Optional[int] = argfield("-v", counter=True)
        simulate: Simulate = argfield(help="run scenarios")
    ```
    """

    if TYPE_CHECKING:  # pragma: no cover
        __program__: Optional[str]
        __version__: Optional[str]

    def __init__(
        self,
        config: Optional[ArgumentConfig] = None,
        _parser: Optional[ArgumentParser] = None,
        _subcommand_prefix: Optional[str] = None,
    ) -> None:
        self._config = config or ArgumentConfig()
        self.__program__ = getattr(self.__class__, _PROGRAM, self.__class__.__name__.lower())
        self.__version__ = getattr(self.__class__, _VERSION, None)
        self._fields: Dict[str, fields.ArgumentField] = {}
        self._subparser_registry: Dict[str, "ArgumentClass"] = {}
        self._raw_annotations = get_type_hints(type(self), include_extras=True)
        self._subcommand_prefix = _subcommand_prefix
        self._is_parsed = False
        self.command: Optional[str] = None
        if _parser is not None:
            self._parser = _parser
            self._is_subcommand = True
        else:
            self._parser = ArgumentParser(
                prog=self.__program__,
                description=self.__doc__,
                formatter_class=RawDescriptionHelpFormatter,
            )
            self._is_subcommand = False
        self._update_argfields()
        self._add_args_to_parser()
        self._add_parser_to_subparser()

    def _update_argfields(self) -> None:
        # Every public annotated class variable is a field; bare annotations get a default argfield()
        used_opts: Set[str] = {"-h", "--help", "--version"}
        for name, annotation in self._raw_annotations.items():
            if name.startswith("_") or name == "command":
                continue
            value = getattr(type(self), name, None)
            if value is None:
                value = fields.argfield()
            if not isinstance(value, fields.ArgumentField):
                raise ArgumentError(f"'{name}' must be declared with argfield()")
            field = deepcopy(value)
            field.evaluate(name, annotation, self._config, used_opts)
            if not field.is_subcommand():
                field.dest = qualified_name(name, qual=self._subcommand_prefix)
            self._fields[name] = field

    def _add_args_to_parser(self) -> None:
        if self.__version__ and not self._is_subcommand:
            self._parser.add_argument(
                "--version", action="version", version="%(prog)s {}".format(self.__version__)
            )
        for field in self._fields.values():
            if not field.is_subcommand():
                field.add_to(self._parser)

    def _add_parser_to_subparser(self) -> None:
        commands = [field for field in self._fields.values() if field.is_subcommand()]
        if not commands:
            return
        subparser = self._parser.add_subparsers(
            title="commands",
            dest=qualified_name(_COMMAND, qual=self._subcommand_prefix),
            metavar=self._config.metavar_transform(_COMMAND),
        )
        subparser.required = True
        for field in commands:
            name = str(field._name)
            command_class = field._type
            parser = subparser.add_parser(
                name,
                help=field.help or (command_class.__doc__ or "").strip().split("\n")[0],
                description=command_class.__doc__,
                formatter_class=RawDescriptionHelpFormatter,
            )
            self._subparser_registry[name] = command_class(
                config=self._config,
                _parser=parser,
                _subcommand_prefix=qualified_name(name, qual=self._subcommand_prefix),
            )

    def _run_validator(self, value: Any, field: fields.ArgumentField) -> None:
        # Lists are validated item by item
        if field.validator is None or value is None:
            return
        try:
            for item in value if isinstance(value, list) else [value]:
                field.validator(item)
        except ValidationError as exc:
            self._parser.error(f"argument {field.get_field_name()}: {exc.message}")

    def _update_class_attr_from_args(self, args: Namespace) -> None:
        for name, field in self._fields.items():
            if field.is_subcommand():
                continue
            value = field.convert(getattr(args, str(field.dest), None))
            self._run_validator(value, field)
            setattr(self, name, value)
        if self._subparser_registry:
            self.command = getattr(args, qualified_name(_COMMAND, qual=self._subcommand_prefix), None)
            for name, instance in self._subparser_registry.items():
                if name == self.command:
                    instance._update_class_attr_from_args(args)
                    setattr(self, name, instance)
                else:
                    setattr(self, name, None)
        self._is_parsed = True

    def parse(self, args: Optional[Union[str, Sequence[str]]] = None) -> "ArgumentClass":
        # A string is split on whitespace; None reads sys.argv
        if self._is_subcommand:
            raise RuntimeError("only the top-level ArgumentClass can parse arguments")
        argv = args.split() if isinstance(args, str) else (list(args) if args is not None else None)
        namespace = self._parser.parse_args(argv)
        self._update_class_attr_from_args(namespace)
        return self

    def __repr__(self) -> str:
        class_name = "{}{}".format("Parsed" if self._is_parsed else "Unparsed", self.__class__.__name__)
        values = [
            f"{name}={getattr(self, name, None)}"
            for name, field in self._fields.items()
            if not field.is_subcommand()
        ]
        if self.command is not None:
            values.append(f"{self.command}={self._subparser_registry[self.command]!r}")
        return f"{class_name}({', '.join(values)})"
