from ..errors import NHMCError

KINDS = (
    "syntax",
    "structure",
    "undefined_kernel",
    "non_exhaustive_schedule",
    "unknown_function",
    "unknown_identifier",
    "unknown_state",
    "arity",
    "type",
    "division_by_zero",
    "domain",
    "negative_entry",
    "row_sum",
)


class SpecError(NHMCError, ValueError):
    """A diagnostic about a chain document.

    ``kind`` is one of :data:`KINDS`.  ``line``/``column`` are 1-based
    positions in the document text when known (otherwise the column is
    relative to the expression).  ``where`` names the field, and ``i``/``n``
    are set for errors raised while evaluating.
    """

    def __init__(self, kind, message, line=None, column=None, expected=frozenset(),
                 where=None, i=None, n=None):
        self.kind = kind
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        self.where = where
        self.i = i
        self.n = n
        super().__init__(str(self))

    def __str__(self):
        loc = []
        if self.where:
            loc.append(self.where)
        if self.line is not None:
            loc.append(f"line {self.line}")
        if self.column is not None:
            loc.append(f"column {self.column}")
        if self.i is not None or self.n is not None:
            loc.append(f"at i={self.i}, n={self.n}")
        prefix = f"[{self.kind}] " + (", ".join(loc) + ": " if loc else "")
        return prefix + self.message

    def located(self, where=None, line=None, column_offset=None, i=None, n=None):
        """Copy with location details filled in."""
        col = self.column
        if column_offset is not None and col is not None:
            col = col + column_offset
        return SpecError(
            self.kind, self.message,
            line=line if line is not None else self.line,
            column=col,
            expected=self.expected,
            where=where or self.where,
            i=i if i is not None else self.i,
            n=n if n is not None else self.n,
        )
