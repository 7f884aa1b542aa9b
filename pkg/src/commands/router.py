from dataclasses import dataclass
from typing import Callable

from src.schemas.run import Command
from src.commands.context import RunContext

Handler = Callable[[RunContext], None]

@dataclass(frozen=True)
class Route:
    command: Command
    handler: Handler
    summary: str
    description: str

class CommandRouter:
    def __init__(self):
        self.routes: dict[Command, Route] = {}

    def command(self, command: Command, summary: str, description: str = "") -> Callable[[Handler], Handler]:
        def register(handler: Handler) -> Handler:
            self.routes[command] = Route(command=command, handler=handler, summary=summary, description=description)
            return handler
        return register

    def include(self, other: "CommandRouter") -> None:
        self.routes.update(other.routes)
