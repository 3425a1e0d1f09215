import sqlite3

import pytest

from sqlloc.fixtures import write_fixture


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory):
    return write_fixture(tmp_path_factory.mktemp("fixture"))


@pytest.fixture
def make_db(tmp_path):
    """Create a SQLite file from a DDL/DML script; returns its path."""
    def make(script, name="db.sqlite"):
        path = tmp_path / name
        conn = sqlite3.connect(path)
        conn.executescript(script)
        conn.commit()
        conn.close()
        return path
    return make


SHOP = """
CREATE TABLE Users (id INTEGER PRIMARY KEY, name TEXT, age INTEGER, "home city" TEXT);
CREATE TABLE Orders (
    order_id INTEGER PRIMARY KEY, user_id INTEGER REFERENCES Users(id), amount REAL, status TEXT
);
CREATE INDEX idx_orders_user ON Orders(user_id);
CREATE VIEW adults AS SELECT id, name FROM Users WHERE age >= 18;
CREATE VIEW adult_names AS SELECT name FROM adults;
INSERT INTO Users VALUES (1, 'Ada', 30, 'Ankara'), (2, 'age', 12, 'Izmir'), (3, 'Cem', 45, NULL);
INSERT INTO Orders VALUES (10, 1, 9.5, 'paid'), (11, 1, 20.0, 'open'), (12, 3, 7.25, 'paid');
"""


@pytest.fixture
def shop_db(make_db):
    return make_db(SHOP, "shop.sqlite")


# -- acceptance report ---------------------------------------------------------

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    """``record(name, ok, detail)`` adds one line to the acceptance summary."""
    def record(name, ok, detail="", label=None):
        ACCEPTANCE_LINES.append(f"{label or ('PASS' if ok else 'FAIL')}  {name}: {detail}")
    return record
