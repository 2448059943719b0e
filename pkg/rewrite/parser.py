"""Parser for the SQL subset ICDB queries are written in

    SELECT [DISTINCT] a, b | * FROM t [, t] [INNER JOIN t ON expr] [WHERE expr]
    DELETE FROM t [WHERE expr]
    INSERT INTO t (a, b) VALUES (v, w) [, (v, w)]

expr combines comparisons (=, !=, <>, <, >, <=, >=) of columns and literals with
AND, OR and parentheses. Tokens come from sqlparse's lexer; the statement
structure is built by a small recursive descent parser, keeping the source
offsets of the FROM and WHERE clauses so rewritten queries can reuse them
verbatim.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from sqlparse import lexer
from sqlparse import tokens as T

from rewrite.exceptions import SqlSyntaxError, UnsupportedConstructError

logger = logging.getLogger(__name__)

KEYWORDS = frozenset((
    'SELECT', 'DISTINCT', 'FROM', 'WHERE', 'AND', 'OR', 'INNER', 'JOIN', 'ON',
    'DELETE', 'INSERT', 'INTO', 'VALUES', 'NULL',
))

UNSUPPORTED = frozenset((
    'GROUP', 'ORDER', 'HAVING', 'LIMIT', 'OFFSET', 'UNION', 'INTERSECT', 'EXCEPT', 'LEFT', 'RIGHT', 'FULL',
    'OUTER', 'CROSS', 'NATURAL', 'STRAIGHT_JOIN', 'USING', 'NOT', 'IN', 'LIKE', 'BETWEEN', 'IS', 'EXISTS',
    'AS', 'UPDATE', 'SET', 'CREATE', 'DROP', 'ALTER', 'REPLACE', 'WITH', 'CASE', 'ALL', 'ANY', 'SOME',
    'REGEXP', 'RLIKE', 'FOR', 'WINDOW', 'TRUNCATE',
))

COMPARISONS = frozenset(('=', '!=', '<>', '<', '>', '<=', '>='))

_STRING_ESCAPES = {'0': '\0', 'n': '\n', 'r': '\r', 't': '\t', 'b': '\b', 'Z': '\x1a'}
_STRING_RENDER = {'\\': '\\\\', "'": "''", '\0': '\\0', '\n': '\\n', '\r': '\\r', '\t': '\\t', '\b': '\\b',
                  '\x1a': '\\Z'}


@dataclass(frozen=True)
class Token:
    kind: str  # word, ident, string, number, op, punct, star, end
    value: str
    start: int
    end: int


@dataclass(frozen=True)
class ColumnRef:
    name: str
    table: Optional[str] = None
    quoted: bool = field(default=False, compare=False)

    def sql(self, quote=None):
        quote = self.quoted if quote is None else quote
        name = quote_identifier(self.name) if quote else self.name
        if self.table is None:
            return name
        return '{}.{}'.format(quote_identifier(self.table) if quote else self.table, name)


@dataclass(frozen=True)
class Literal:
    value: Optional[str]
    is_number: bool = False

    def sql(self):
        if self.value is None:
            return 'NULL'
        if self.is_number:
            return self.value
        return "'{}'".format(''.join(_STRING_RENDER.get(char, char) for char in self.value))


Operand = Union[ColumnRef, Literal]


@dataclass(frozen=True)
class Comparison:
    left: Operand
    op: str
    right: Operand

    def columns(self):
        return [operand for operand in (self.left, self.right) if isinstance(operand, ColumnRef)]


@dataclass(frozen=True)
class BoolOp:
    op: str  # AND, OR
    operands: Tuple[Union['BoolOp', Comparison], ...]

    def columns(self):
        return [column for operand in self.operands for column in operand.columns()]


Expression = Union[BoolOp, Comparison]


@dataclass(frozen=True)
class TableRef:
    name: str
    quoted: bool = field(default=False, compare=False)

    def sql(self):
        return quote_identifier(self.name) if self.quoted else self.name


@dataclass(frozen=True)
class Join:
    table: TableRef
    condition: Expression


@dataclass(frozen=True)
class ParsedQuery:
    kind: str  # SELECT, DELETE, INSERT
    tables: Tuple[TableRef, ...]
    select_attrs: Tuple[ColumnRef, ...] = ()
    star: bool = False
    distinct: bool = False
    joins: Tuple[Join, ...] = ()
    where: Optional[Expression] = None
    insert_columns: Tuple[ColumnRef, ...] = ()
    insert_rows: Tuple[Tuple[Literal, ...], ...] = ()
    source: str = field(default='', compare=False, repr=False)
    from_start: int = field(default=0, compare=False, repr=False)
    body_end: int = field(default=0, compare=False, repr=False)
    terminated: bool = field(default=False, compare=False, repr=False)

    @property
    def all_tables(self):
        return list(self.tables) + [join.table for join in self.joins]

    @property
    def condition_columns(self):
        """Columns referenced by the WHERE clause, first mention first
        """
        return _unique(self.where.columns() if self.where is not None else [])

    @property
    def join_columns(self):
        return _unique([column for join in self.joins for column in join.condition.columns()])

    @property
    def uses_backticks(self):
        refs = self.select_attrs if self.kind == 'SELECT' else self.insert_columns
        return any(ref.quoted for ref in refs)

    @property
    def from_clause(self):
        """FROM through the end of WHERE, as written
        """
        return self.source[self.from_start:self.body_end]


def _unique(columns):
    seen = set()
    result = []
    for column in columns:
        marker = (column.table.lower() if column.table else None, column.name.lower())
        if marker not in seen:
            seen.add(marker)
            result.append(column)
    return result


def quote_identifier(name):
    return '`{}`'.format(name.replace('`', '``'))


def _unquote_string(text):
    quote, body = text[0], text[1:-1]
    out = []
    i = 0
    while i < len(body):
        char = body[i]
        if char == '\\' and i + 1 < len(body):
            out.append(_STRING_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        elif char == quote and body[i + 1:i + 2] == quote:
            out.append(quote)
            i += 2
        else:
            out.append(char)
            i += 1
    return ''.join(out)


def tokenize(sql):
    """Turn sqlparse's lexer stream into parser tokens with source offsets
    """
    tokens = []
    offset = 0
    for ttype, value in lexer.tokenize(sql):
        start, offset = offset, offset + len(value)

        if ttype in T.Whitespace or ttype in T.Comment:
            continue
        if ttype in T.Name.Placeholder:
            raise UnsupportedConstructError('Statement parameters are not supported', _byte_offset(sql, start))
        if ttype in T.Keyword or ttype in T.Name:
            if value.startswith('`'):
                tokens.append(Token('ident', value[1:-1].replace('``', '`'), start, offset))
                continue
            # multi word keywords such as "INNER JOIN" or "GROUP BY"
            position = 0
            for word in value.split():
                position = value.index(word, position)
                tokens.append(Token('word', word, start + position, start + position + len(word)))
                position += len(word)
        elif ttype in T.String.Single or ttype in T.String.Symbol:
            tokens.append(Token('string', _unquote_string(value), start, offset))
        elif ttype in T.Number:
            tokens.append(Token('number', value, start, offset))
        elif ttype in T.Operator.Comparison:
            if value.split()[0].upper() in UNSUPPORTED:
                raise UnsupportedConstructError('"{}" is not supported'.format(value), _byte_offset(sql, start))
            tokens.append(Token('op', value, start, offset))
        elif ttype in T.Wildcard:
            tokens.append(Token('star', value, start, offset))
        elif ttype in T.Punctuation:
            tokens.append(Token('punct', value, start, offset))
        elif ttype in T.Operator:
            raise UnsupportedConstructError('Arithmetic is not supported', _byte_offset(sql, start))
        else:
            raise SqlSyntaxError('Unexpected "{}"'.format(value), _byte_offset(sql, start))

    tokens.append(Token('end', '', len(sql), len(sql)))
    return tokens


def _byte_offset(sql, offset):
    return len(sql[:offset].encode('utf-8'))


class _Parser:
    def __init__(self, sql):
        self.sql = sql
        self.tokens = tokenize(sql)
        self.pos = 0

    def peek(self, ahead=0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self):
        token = self.peek()
        self.pos += 1
        return token

    def error(self, message, token=None):
        token = token or self.peek()
        return SqlSyntaxError(message, _byte_offset(self.sql, token.start))

    def unsupported(self, token):
        return UnsupportedConstructError('"{}" is not supported'.format(token.value),
                                         _byte_offset(self.sql, token.start))

    def is_word(self, word, ahead=0):
        token = self.peek(ahead)
        return token.kind == 'word' and token.value.upper() == word

    def accept_word(self, word):
        if self.is_word(word):
            return self.advance()
        return None

    def expect_word(self, word):
        token = self.accept_word(word)
        if token is None:
            raise self.unexpected('expected {}'.format(word))
        return token

    def is_punct(self, value, ahead=0):
        token = self.peek(ahead)
        return token.kind == 'punct' and token.value == value

    def expect_punct(self, value):
        if not self.is_punct(value):
            raise self.unexpected('expected "{}"'.format(value))
        return self.advance()

    def unexpected(self, message):
        token = self.peek()
        if token.kind == 'word' and token.value.upper() in UNSUPPORTED:
            return self.unsupported(token)
        if token.kind == 'end':
            return self.error('Unexpected end of statement, {}'.format(message))
        return self.error('Unexpected "{}", {}'.format(token.value, message))

    def identifier(self, what):
        token = self.peek()
        if token.kind == 'ident':
            return self.advance().value, True
        if token.kind == 'word' and token.value.upper() not in KEYWORDS and token.value.upper() not in UNSUPPORTED:
            return self.advance().value, False
        raise self.unexpected('expected {}'.format(what))

    def column(self):
        name, quoted = self.identifier('a column')
        if self.is_punct('('):
            raise UnsupportedConstructError('Function calls and aggregates are not supported',
                                            _byte_offset(self.sql, self.peek().start))
        if self.is_punct('.'):
            self.advance()
            if self.peek().kind == 'star':
                raise self.unsupported(self.peek())
            column, column_quoted = self.identifier('a column')
            return ColumnRef(column, table=name, quoted=quoted or column_quoted)
        return ColumnRef(name, quoted=quoted)

    def table(self):
        name, quoted = self.identifier('a table')
        if self.is_punct('.'):
            raise UnsupportedConstructError('Schema qualified tables are not supported',
                                            _byte_offset(self.sql, self.peek().start))
        return TableRef(name, quoted=quoted)

    def parse(self):
        token = self.peek()
        if self.is_word('SELECT'):
            query = self.select()
        elif self.is_word('DELETE'):
            query = self.delete()
        elif self.is_word('INSERT'):
            query = self.insert()
        elif token.kind == 'word' and token.value.upper() in UNSUPPORTED:
            raise self.unsupported(token)
        else:
            raise self.unexpected('expected SELECT, DELETE or INSERT')

        body_end = self.tokens[self.pos - 1].end
        terminated = False
        if self.is_punct(';'):
            self.advance()
            terminated = True
        if self.peek().kind != 'end':
            raise self.unexpected('expected end of statement')
        return ParsedQuery(source=self.sql, body_end=body_end, terminated=terminated, **query)

    def select(self):
        self.expect_word('SELECT')
        distinct = self.accept_word('DISTINCT') is not None
        star = False
        attrs = []
        if self.peek().kind == 'star':
            self.advance()
            star = True
        else:
            attrs.append(self.column())
            while self.is_punct(','):
                self.advance()
                attrs.append(self.column())
        if not self.is_word('FROM'):
            raise self.unexpected('expected FROM')
        from_start = self.peek().start
        self.advance()

        tables = [self.table()]
        while self.is_punct(','):
            self.advance()
            tables.append(self.table())

        joins = []
        while self.is_word('INNER') or self.is_word('JOIN'):
            self.accept_word('INNER')
            self.expect_word('JOIN')
            table = self.table()
            self.expect_word('ON')
            joins.append(Join(table, self.expression()))

        where = self.where()
        return dict(kind='SELECT', tables=tuple(tables), select_attrs=tuple(attrs), star=star, distinct=distinct,
                    joins=tuple(joins), where=where, from_start=from_start)

    def delete(self):
        self.expect_word('DELETE')
        if not self.is_word('FROM'):
            raise self.unexpected('expected FROM')
        from_start = self.peek().start
        self.advance()
        table = self.table()
        return dict(kind='DELETE', tables=(table,), where=self.where(), from_start=from_start)

    def insert(self):
        self.expect_word('INSERT')
        self.expect_word('INTO')
        table = self.table()
        self.expect_punct('(')
        columns = [self.column()]
        while self.is_punct(','):
            self.advance()
            columns.append(self.column())
        self.expect_punct(')')
        if len({column.name.lower() for column in columns}) != len(columns):
            raise self.error('Column listed twice in INSERT')
        self.expect_word('VALUES')

        rows = [self.values_row(len(columns))]
        while self.is_punct(','):
            self.advance()
            rows.append(self.values_row(len(columns)))
        return dict(kind='INSERT', tables=(table,), insert_columns=tuple(columns), insert_rows=tuple(rows))

    def values_row(self, count):
        start = self.expect_punct('(')
        values = [self.literal(allow_null=True)]
        while self.is_punct(','):
            self.advance()
            values.append(self.literal(allow_null=True))
        self.expect_punct(')')
        if len(values) != count:
            raise self.error('Expected {} values, got {}'.format(count, len(values)), start)
        return tuple(values)

    def literal(self, allow_null=False):
        token = self.peek()
        if token.kind == 'string':
            self.advance()
            return Literal(token.value)
        if token.kind == 'number':
            self.advance()
            return Literal(token.value, is_number=True)
        if allow_null and self.accept_word('NULL'):
            return Literal(None)
        raise self.unexpected('expected a literal')

    def where(self):
        if self.accept_word('WHERE'):
            return self.expression()
        return None

    def expression(self):
        operands = [self.conjunction()]
        while self.accept_word('OR'):
            operands.append(self.conjunction())
        return _combine('OR', operands)

    def conjunction(self):
        operands = [self.primary()]
        while self.accept_word('AND'):
            operands.append(self.primary())
        return _combine('AND', operands)

    def primary(self):
        if self.is_punct('('):
            if self.is_word('SELECT', ahead=1):
                raise UnsupportedConstructError('Subqueries are not supported',
                                                _byte_offset(self.sql, self.peek(1).start))
            self.advance()
            expression = self.expression()
            self.expect_punct(')')
            return expression
        left = self.operand()
        token = self.peek()
        if token.kind != 'op' or token.value not in COMPARISONS:
            raise self.unexpected('expected a comparison operator')
        self.advance()
        return Comparison(left, token.value, self.operand())

    def operand(self):
        token = self.peek()
        if token.kind in ('string', 'number'):
            return self.literal()
        if self.is_punct('(') and self.is_word('SELECT', ahead=1):
            raise UnsupportedConstructError('Subqueries are not supported',
                                            _byte_offset(self.sql, self.peek(1).start))
        return self.column()


def _combine(op, operands):
    if len(operands) == 1:
        return operands[0]
    flat = []
    for operand in operands:
        if isinstance(operand, BoolOp) and operand.op == op:
            flat.extend(operand.operands)
        else:
            flat.append(operand)
    return BoolOp(op, tuple(flat))


def parse(sql):
    """Parse one statement of the supported subset
    """
    query = _Parser(sql).parse()
    logger.debug('Parsed {} statement over {}'.format(query.kind, ', '.join(t.name for t in query.all_tables)))
    return query


def render_expression(expression):
    if isinstance(expression, Comparison):
        return '{} {} {}'.format(_render_operand(expression.left), expression.op, _render_operand(expression.right))
    parts = []
    for operand in expression.operands:
        text = render_expression(operand)
        parts.append('({})'.format(text) if isinstance(operand, BoolOp) else text)
    return ' {} '.format(expression.op).join(parts)


def _render_operand(operand):
    return operand.sql()


def render(query):
    """Render a parsed statement in normalized form
    """
    where = ' WHERE {}'.format(render_expression(query.where)) if query.where is not None else ''

    if query.kind == 'SELECT':
        columns = '*' if query.star else ', '.join(column.sql() for column in query.select_attrs)
        joins = ''.join(' INNER JOIN {} ON {}'.format(join.table.sql(), render_expression(join.condition))
                        for join in query.joins)
        return 'SELECT {}{} FROM {}{}{};'.format(
            'DISTINCT ' if query.distinct else '', columns,
            ', '.join(table.sql() for table in query.tables), joins, where,
        )

    if query.kind == 'DELETE':
        return 'DELETE FROM {}{};'.format(query.tables[0].sql(), where)

    return 'INSERT INTO {} ({}) VALUES {};'.format(
        query.tables[0].sql(),
        ', '.join(column.sql() for column in query.insert_columns),
        ', '.join('({})'.format(', '.join(value.sql() for value in row)) for row in query.insert_rows),
    )
