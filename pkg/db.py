"""Database operations for stored replicate results."""

import sqlite3
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional


@dataclass
class ReplicateRecord:
    """One replicate of one study cell."""
    example: int
    knots: int
    order: int
    criterion: str
    gamma: str
    design: str
    seed: int
    mse: float
    knots_selected: int
    iterations: int
    best_lambda: float
    created_date: Optional[str] = None
    id: Optional[int] = None


DB_PATH = Path(__file__).parent / "studies.db"


def get_connection(db_path: Optional[Path] = None) -> sqlite3.Connection:
    """Get a database connection."""
    conn = sqlite3.connect(db_path or DB_PATH)
    conn.row_factory = sqlite3.Row
    return conn


def init_db(db_path: Optional[Path] = None):
    """Initialize the database schema."""
    conn = get_connection(db_path)
    cursor = conn.cursor()

    # spline_order: "order" is an SQL keyword
    cursor.execute("""
        CREATE TABLE IF NOT EXISTS replicates (
            id INTEGER PRIMARY KEY,
            example INTEGER NOT NULL,
            knots INTEGER NOT NULL,
            spline_order INTEGER NOT NULL,
            criterion TEXT NOT NULL,
            gamma TEXT NOT NULL,
            design TEXT NOT NULL,
            seed INTEGER NOT NULL,
            mse REAL,
            knots_selected INTEGER,
            iterations INTEGER,
            best_lambda REAL,
            created_date DATE,
            UNIQUE (example, knots, spline_order, criterion, gamma, design, seed)
        )
    """)

    cursor.execute("CREATE INDEX IF NOT EXISTS idx_cell ON replicates(example, criterion, gamma)")

    conn.commit()
    conn.close()


def insert_replicate(record: ReplicateRecord, db_path: Optional[Path] = None) -> bool:
    """
    Insert one replicate.
    Returns True if inserted, False if that cell and seed are already stored.
    """
    conn = get_connection(db_path)
    cursor = conn.cursor()

    try:
        cursor.execute("""
            INSERT INTO replicates (
                example, knots, spline_order, criterion, gamma, design, seed,
                mse, knots_selected, iterations, best_lambda, created_date
            ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, (
            record.example,
            record.knots,
            record.order,
            record.criterion,
            record.gamma,
            record.design,
            record.seed,
            record.mse,
            record.knots_selected,
            record.iterations,
            record.best_lambda,
            record.created_date or datetime.now().strftime("%Y-%m-%d"),
        ))
        conn.commit()
        return True
    except sqlite3.IntegrityError:
        # Duplicate cell and seed
        return False
    finally:
        conn.close()


def insert_summary(summary, db_path: Optional[Path] = None) -> int:
    """Store every successful replicate of a StudySummary; returns the number inserted."""
    config = summary.config
    knots = config.initial_knots(summary.example.n)
    count = 0
    for r in summary.results:
        if r.failed:
            continue
        record = ReplicateRecord(
            example=summary.example.id,
            knots=knots,
            order=config.order,
            criterion=config.criterion,
            gamma=config.gamma_label,
            design=config.design,
            seed=r.seed,
            mse=r.mse,
            knots_selected=r.knots_selected,
            iterations=r.iterations,
            best_lambda=r.best_lambda,
        )
        if insert_replicate(record, db_path):
            count += 1
    return count


def get_replicates(
    example: Optional[int] = None,
    criterion: Optional[str] = None,
    db_path: Optional[Path] = None,
) -> list[dict]:
    """Get stored replicates with optional filtering."""
    conn = get_connection(db_path)
    cursor = conn.cursor()

    query = "SELECT * FROM replicates WHERE 1=1"
    params = []

    if example is not None:
        query += " AND example = ?"
        params.append(example)

    if criterion:
        query += " AND criterion = ?"
        params.append(criterion)

    query += " ORDER BY example, criterion, gamma, knots, seed"

    cursor.execute(query, params)
    rows = cursor.fetchall()
    conn.close()

    return [dict(row) for row in rows]


def get_examples(db_path: Optional[Path] = None) -> list[int]:
    """Get list of examples with stored replicates."""
    conn = get_connection(db_path)
    cursor = conn.cursor()
    cursor.execute("SELECT DISTINCT example FROM replicates ORDER BY example")
    examples = [row[0] for row in cursor.fetchall()]
    conn.close()
    return examples


def get_replicate_count(db_path: Optional[Path] = None) -> int:
    """Get total number of stored replicates."""
    conn = get_connection(db_path)
    cursor = conn.cursor()
    cursor.execute("SELECT COUNT(*) FROM replicates")
    count = cursor.fetchone()[0]
    conn.close()
    return count


if __name__ == "__main__":
    # Initialize database when run directly
    init_db()
    print(f"Database initialized at {DB_PATH}")
