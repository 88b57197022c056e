from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Set, Type, Union, cast

from typing_extensions import Annotated, Doc, Literal, get_args, get_origin

import deadzone_pbc.cli.parser as parser

from ..constants import ActionsEnum
from ..exceptions import ArgumentError
from ..validators import ArgumentValidator
from .config import ArgumentConfig

if TYPE_CHECKING:  # pragma: no cover
    from argparse import ArgumentParser

_SCALAR_TYPES = (int, float, str, Path)


class ArgumentField:
    # Built by `argfield()`; ArgumentClass evaluates a copy per declaring class
    # This class holds everything needed to register one argument (or one subcommand)
    # with argparse and to convert and validate its parsed value.

    __slots__ = (
        "default",
        "dest",
        "metavar",
        "counter",
        "validator",
        "help",
        "nargs",
        "_config",
        "_name",
        "_shortopts",
        "_longopts",
        "_required",
        "_origin",
        "_type",
        "_raw_type",
        "_action",
        "_choices",
    )

    def __init__(
        self,
        *opts: str,
        default: Optional[Any] = None,
        help: Optional[str] = None,
        nargs: Optional[Union[int, Literal["+", "?", "*"]]] = None,
        dest: Optional[str] = None,
        counter: Optional[bool] = False,
        metavar: Optional[str] = None,
        validator: Optional[ArgumentValidator[Any]] = None,
    ) -> None:
        self._shortopts = [opt for opt in opts if opt.startswith("-") and opt[0:2] != "--"]
        self._longopts = [opt for opt in opts if opt.startswith("--")]
        self._name: Optional[str] = None
        self.default = default
        self.help = help
        self.nargs = nargs
        self.dest = dest
        self.counter = counter
        self.metavar = metavar
        self.validator = validator
        self._required = False
        self._origin: Optional[Any] = None
        self._type: Optional[Any] = None
        self._raw_type: Optional[Any] = None
        self._action: Optional[ActionsEnum] = ActionsEnum.STORE
        self._choices: Optional[List[str]] = None
        self._config = ArgumentConfig()

    def is_list(self) -> bool:
        return self._origin is list

    def is_enum(self) -> bool:
        return isinstance(self._type, type) and issubclass(self._type, Enum)

    def is_subcommand(self) -> bool:
        return isinstance(self._type, type) and issubclass(self._type, parser.ArgumentClass)

    def is_positional(self) -> bool:
        return not self._longopts and not self._shortopts

    def get_annotated_doc(self) -> Optional[str]:
        if get_origin(self._raw_type) is Annotated:
            doc = next(filter(lambda item: isinstance(item, Doc), get_args(self._raw_type)[1:]), None)
            if isinstance(doc, Doc):
                return doc.documentation
        return None

    def get_field_name(self) -> str:
        opts = self._shortopts + self._longopts
        if opts:
            return "/".join(opts)
        return cast(str, self.metavar or self._name)

    def eval_name(self, name: str) -> None:
        if name.count("__") > 0:
            raise ArgumentError(f"'{name}' cannot have '__' in their name")
        self._name = name
        self.dest = self.dest or name

    def eval_type(self, annotation: Any) -> None:
        # Unwrap Annotated[...], then Optional[...], then List[...]
        self._raw_type = annotation
        if get_origin(annotation) is Annotated:
            annotation = get_args(annotation)[0]
        if get_origin(annotation) is Union:
            members = [arg for arg in get_args(annotation) if arg is not type(None)]
            if len(members) != 1 or len(get_args(annotation)) != 2:
                raise ArgumentError("only Optional[...] unions are supported", field=self)
            annotation = members[0]
        else:
            self._required = True
        if get_origin(annotation) is list:
            self._origin = list
            (annotation,) = get_args(annotation)
        if not (
            annotation in _SCALAR_TYPES
            or annotation is bool
            or (isinstance(annotation, type) and issubclass(annotation, (Enum, parser.ArgumentClass)))
        ):
            raise ArgumentError(f"unsupported type {annotation!r}", field=self)
        self._type = annotation
        if self.is_enum():
            self._choices = [str(member.value) for member in cast(Type[Enum], annotation)]

    def eval_longopts(self, used_opts: Set[str]) -> None:
        # Optional fields without explicit options get a generated `--name`
        name = cast(str, self._name)
        if self._longopts or self._shortopts or self.is_subcommand():
            used_opts.update(self._longopts + self._shortopts)
            return
        if not self._required or self._type is bool or self.counter:
            opt = "--{}".format(name.lower().replace("_", "-"))
            if opt in used_opts:
                raise ArgumentError(f"conflict in generating 'longopt'. '{opt}' already in use", self)
            self._longopts = [opt]
            used_opts.add(opt)

    def eval_action(self) -> None:
        if self.counter:
            if self._type is not int:
                raise ArgumentError("counter fields must be int", field=self)
            self._action = ActionsEnum.COUNT
        elif self._type is bool:
            self._action = ActionsEnum.STORE_TRUE
        elif self.is_list() and not self.is_positional() and not self.nargs:
            # Repeatable option: --controller pi --controller pidz
            self._action = ActionsEnum.APPEND
        else:
            self._action = ActionsEnum.STORE

    def eval_nargs(self) -> None:
        if self.nargs is not None and not self.is_list():
            raise ArgumentError("must be list type when 'nargs' is specified", field=self)
        if self.is_list() and self.is_positional() and self.nargs is None:
            self.nargs = "+" if self._required else "*"

    def eval_default(self) -> None:
        if self.default is not None and self._required and self.is_positional():
            raise ArgumentError("'default' is invalid for 'required' fields", field=self)
        if self.default is None:
            if self.counter:
                self.default = 0
            elif self._type is bool:
                self.default = False

    def eval_metavar(self) -> None:
        if self.metavar:
            return
        if self._choices:
            metavar = "({})".format("|".join(self._choices))
        elif self.is_positional():
            metavar = cast(str, self._name)
        elif self._type is Path:
            metavar = "path"
        elif self._config.show_type_in_help and isinstance(self._type, type):
            metavar = self._type.__name__
        else:
            metavar = "value"
        self.metavar = self._config.metavar_transform(metavar)

    def eval_help(self) -> None:
        self.help = self.help or self.get_annotated_doc()
        if not self._config.show_default_in_help or self.default is None or self.counter or self._type is bool:
            return
        default = self.default.value if isinstance(self.default, Enum) else self.default
        self.help = "{} (default: {})".format(self.help or "", default).strip()

    def evaluate(self, name: str, annotation: Any, config: ArgumentConfig, used_opts: Set[str]) -> None:
        self._config = config
        self.eval_name(name)
        self.eval_type(annotation)
        if self.is_subcommand():
            return
        self.eval_longopts(used_opts)
        self.eval_action()
        self.eval_nargs()
        self.eval_default()
        self.eval_metavar()
        self.eval_help()

    def parser_kwargs(self) -> Dict[str, Any]:
        kwargs: Dict[str, Any] = {"action": cast(ActionsEnum, self._action).value, "help": self.help}
        if not self.is_positional():
            kwargs["dest"] = self.dest
            if self._required and self.default is None and self._type is not bool and not self.counter:
                kwargs["required"] = True
        if self._action in (ActionsEnum.COUNT, ActionsEnum.STORE_TRUE):
            kwargs["default"] = self.default
            return kwargs
        kwargs["metavar"] = self.metavar
        kwargs["type"] = str if self.is_enum() else self._type
        if self._choices:
            kwargs["choices"] = self._choices
        if self.nargs is not None:
            kwargs["nargs"] = self.nargs
        if self.default is not None:
            kwargs["default"] = self.default.value if isinstance(self.default, Enum) else self.default
        return kwargs

    def add_to(self, argparser: "ArgumentParser") -> None:
        opts = [cast(str, self.dest)] if self.is_positional() else self._shortopts + self._longopts
        argparser.add_argument(*opts, **self.parser_kwargs())

    def convert(self, value: Any) -> Any:
        # argparse hands enum choices back as strings
        if value is None or not self.is_enum():
            return value
        enum = cast(Type[Enum], self._type)
        if isinstance(value, list):
            return [enum(item) for item in value]
        return enum(value)

    def __repr__(self) -> str:
        return f"ArgumentField(name={self._name!r}, opts={self._shortopts + self._longopts})"


def argfield(
    *opts: str,
    default: Optional[Any] = None,
    help: Optional[str] = None,
    nargs: Optional[Union[int, Literal["+", "?", "*"]]] = None,
    dest: Optional[str] = None,
    counter: Optional[bool] = False,
    metavar: Optional[str] = None,
    validator: Optional[ArgumentValidator[Any]] = None,
) -> Any:
    """
    Declare a command-line argument on an `ArgumentClass`.

    The annotation decides the rest: `Optional[...]` fields are options (with a generated `--name`
    unless `opts` are given), other fields are positional, `List[...]` options may be repeated,
    `bool` is a flag and `Enum` types become choices. A field annotated with an `ArgumentClass`
    subclass is a subcommand.

    `validator` runs on the parsed value (on every item for lists); a failure is reported by argparse
    as an error on that argument.
    """
    return ArgumentField(
        *opts,
        default=default,
        help=help,
        nargs=nargs,
        dest=dest,
        counter=counter,
        metavar=metavar,
        validator=validator,
    )
