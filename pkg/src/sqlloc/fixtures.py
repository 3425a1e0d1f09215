"""A small bundled corpus: three SQLite databases, 32 questions and a Turkish dictionary.

``write_fixture(root)`` materializes everything under ``root`` and returns the
paths. Data rows come from a seeded generator, so the files are identical on
every call.
"""

from __future__ import annotations

import json
import random
import sqlite3
from pathlib import Path
from typing import NamedTuple

SCHEMAS = {
    "school": """
        CREATE TABLE students (
            id INTEGER PRIMARY KEY, name TEXT NOT NULL, age INTEGER, city TEXT,
            "enrollment date" TEXT
        );
        CREATE TABLE courses (
            id INTEGER PRIMARY KEY, title TEXT, credits INTEGER, "Course Level" TEXT
        );
        CREATE TABLE enrollments (
            student_id INTEGER REFERENCES students(id),
            course_id INTEGER REFERENCES courses(id),
            grade REAL
        );
        CREATE INDEX idx_enrollments_student ON enrollments(student_id);
    """,
    "retail": """
        CREATE TABLE customers (
            customer_id INTEGER PRIMARY KEY, name TEXT, segment TEXT, city TEXT
        );
        CREATE TABLE orders (
            order_id INTEGER PRIMARY KEY,
            customer_id INTEGER REFERENCES customers(customer_id),
            "order date" TEXT, total REAL, status TEXT
        );
        CREATE TABLE products (
            product_id INTEGER PRIMARY KEY, name TEXT, category TEXT, price REAL
        );
        CREATE TABLE order_items (
            order_id INTEGER REFERENCES orders(order_id),
            product_id INTEGER REFERENCES products(product_id),
            quantity INTEGER
        );
        CREATE VIEW big_orders AS SELECT order_id, total FROM orders WHERE total > 100;
    """,
    "library": """
        CREATE TABLE authors (author_id INTEGER PRIMARY KEY, name TEXT, country TEXT);
        CREATE TABLE publishers (publisher_id INTEGER PRIMARY KEY, name TEXT, nation TEXT);
        CREATE TABLE books (
            book_id INTEGER PRIMARY KEY, title TEXT,
            author_id INTEGER REFERENCES authors(author_id),
            publisher_id INTEGER REFERENCES publishers(publisher_id),
            year INTEGER, price REAL
        );
        CREATE TABLE loans (
            loan_id INTEGER PRIMARY KEY, book_id INTEGER REFERENCES books(book_id),
            "Member Name" TEXT, loan_date TEXT, returned INTEGER
        );
    """,
}

# source identifier -> Turkish; normalization turns these into ASCII snake_case.
# country and nation both become "ulke", which exercises collision suffixing.
IDENTIFIERS = {
    "students": "öğrenciler", "name": "ad", "age": "yaş", "city": "şehir",
    "enrollment date": "kayıt tarihi", "courses": "dersler", "title": "başlık",
    "credits": "kredi", "Course Level": "ders seviyesi", "enrollments": "kayıtlar",
    "student_id": "öğrenci_id", "course_id": "ders_id", "grade": "puan",
    "customers": "müşteriler", "customer_id": "müşteri_id", "segment": "segment",
    "orders": "siparişler", "order_id": "sipariş_id", "order date": "sipariş tarihi",
    "total": "toplam", "status": "durum", "products": "ürünler", "product_id": "ürün_id",
    "category": "kategori", "price": "fiyat", "order_items": "sipariş_kalemleri",
    "quantity": "miktar", "authors": "yazarlar", "author_id": "yazar_id", "country": "ülke",
    "publishers": "yayınevleri", "publisher_id": "yayınevi_id", "nation": "ülke",
    "books": "kitaplar", "book_id": "kitap_id", "year": "yıl", "loans": "ödünçler",
    "loan_id": "ödünç_id", "Member Name": "üye adı", "loan_date": "ödünç_tarihi",
    "returned": "iade_edildi",
}
DB_IDS = {"school": "okul", "retail": "perakende", "library": "kutuphane"}


class FixtureItem(NamedTuple):
    db_id: str
    question: str
    evidence: str
    sql: str
    question_tr: str


ITEMS = [
    FixtureItem("school", "List the names of students older than 20.",
                "older than 20 refers to `age` > 20",
                "SELECT name FROM students WHERE age > 20 ORDER BY name",
                "20 yaşından büyük öğrencilerin adlarını listeleyin."),
    FixtureItem("school", "Which students scored at least 90 and in which course?",
                "scored refers to `grade`; course name is `title`",
                "SELECT s.name, c.title FROM students AS s JOIN enrollments AS e ON s.id = e.student_id "
                "JOIN courses AS c ON c.id = e.course_id WHERE e.grade >= 90",
                "Hangi öğrenciler en az 90 aldı ve hangi derste?"),
    FixtureItem("school", "How many students are enrolled in each course, including empty courses?",
                "use `enrollments` joined to `courses`",
                "SELECT c.title, COUNT(e.student_id) FROM courses c LEFT JOIN enrollments e "
                "ON c.id = e.course_id GROUP BY c.id, c.title",
                "Boş dersler dahil her derse kaç öğrenci kayıtlı?"),
    FixtureItem("school", "What is the average age per city for cities with at least 2 students?",
                "average age refers to AVG(`age`) grouped by `city`",
                "SELECT city, AVG(age) FROM students GROUP BY city HAVING COUNT(*) >= 2",
                "En az 2 öğrencisi olan şehirlerde şehir başına ortalama yaş nedir?"),
    FixtureItem("school", "Give the 3 latest enrollment dates of students from 'Ankara'.",
                "latest refers to ORDER BY `enrollment date` DESC",
                "SELECT \"enrollment date\" FROM students WHERE city = 'Ankara' "
                "ORDER BY \"enrollment date\" DESC LIMIT 3",
                "'Ankara' şehrindeki öğrencilerin en son 3 kayıt tarihini verin."),
    FixtureItem("school", "Name the students who failed any course with a grade below 50.",
                "failed refers to `grade` < 50",
                "SELECT name FROM students WHERE id IN (SELECT student_id FROM enrollments WHERE grade < 50)",
                "Herhangi bir dersten 50 altında puan alan öğrencileri adlandırın."),
    FixtureItem("school", "For students whose best grade exceeds 80, show the name and the best grade.",
                "best grade refers to MAX(`grade`)",
                "WITH top AS (SELECT student_id, MAX(grade) AS best FROM enrollments GROUP BY student_id) "
                "SELECT s.name, t.best FROM top t JOIN students s ON s.id = t.student_id WHERE t.best > 80",
                "En iyi puanı 80 üzerinde olan öğrencilerin adını ve en iyi puanını gösterin."),
    FixtureItem("school", "Label each course as heavy when it has 5 or more credits, otherwise light.",
                "heavy refers to `credits` >= 5",
                "SELECT title, CASE WHEN credits >= 5 THEN 'heavy' ELSE 'light' END FROM courses",
                "Her dersi 5 veya daha fazla kredisi varsa heavy, yoksa light olarak etiketleyin."),
    FixtureItem("school", "What is the mean grade in course 2?",
                "mean grade = CAST(SUM(`grade`) AS REAL) / COUNT(*)",
                "SELECT CAST(SUM(grade) AS REAL) / COUNT(*) FROM enrollments WHERE course_id = 2",
                "2 numaralı dersteki ortalama puan nedir?"),
    FixtureItem("school", "List students from the city called 'age' together with advanced course titles.",
                "advanced refers to `Course Level` = 'advanced'",
                "SELECT name FROM students WHERE city = 'age' UNION "
                "SELECT title FROM courses WHERE \"Course Level\" = 'advanced'",
                "'age' adlı şehirdeki öğrencileri ve ileri seviye ders başlıklarını listeleyin."),
    FixtureItem("retail", "How many orders have been shipped?",
                "shipped refers to `status` = 'shipped'",
                "SELECT COUNT(*) FROM orders WHERE status = 'shipped'",
                "Kaç sipariş gönderildi?"),
    FixtureItem("retail", "Who are the top 5 customers by total spending?",
                "spending refers to SUM(`total`)",
                "SELECT c.name, SUM(o.total) FROM customers c JOIN orders o ON c.customer_id = o.customer_id "
                "GROUP BY c.customer_id ORDER BY SUM(o.total) DESC, c.name LIMIT 5",
                "Toplam harcamaya göre ilk 5 müşteri kimdir?"),
    FixtureItem("retail", "Which categories have revenue above 100?",
                "revenue = SUM(`quantity` * `price`)",
                "SELECT p.category, SUM(oi.quantity * p.price) AS revenue FROM order_items oi "
                "JOIN products p ON p.product_id = oi.product_id GROUP BY p.category HAVING revenue > 100",
                "Hangi kategorilerin geliri 100 üzerindedir?"),
    FixtureItem("retail", "List products priced above the average price, most expensive first.",
                "average price refers to AVG(`price`)",
                "SELECT name FROM products WHERE price > (SELECT AVG(price) FROM products) ORDER BY price DESC, name",
                "Ortalama fiyatın üzerindeki ürünleri en pahalıdan başlayarak listeleyin."),
    FixtureItem("retail", "Show each order from 2023 with the customer segment.",
                "from 2023 refers to `order date` LIKE '2023-%'",
                "SELECT o.order_id, c.segment FROM orders o LEFT JOIN customers c "
                "ON c.customer_id = o.customer_id WHERE o.\"order date\" LIKE '2023-%'",
                "2023 yılındaki her siparişi müşteri segmentiyle birlikte gösterin."),
    FixtureItem("retail", "How many orders were placed in each month?",
                "month refers to strftime('%m', `order date`)",
                "SELECT strftime('%m', \"order date\") AS month, COUNT(*) FROM orders GROUP BY month ORDER BY month",
                "Her ay kaç sipariş verildi?"),
    FixtureItem("retail", "Which customers never placed an order?",
                "no rows in `orders` for the `customer_id`",
                "SELECT name FROM customers WHERE NOT EXISTS "
                "(SELECT 1 FROM orders WHERE orders.customer_id = customers.customer_id)",
                "Hangi müşteriler hiç sipariş vermedi?"),
    FixtureItem("retail", "List every product category and every customer segment, keeping duplicates.",
                "`category` from `products`, `segment` from `customers`",
                "SELECT category FROM products UNION ALL SELECT segment FROM customers",
                "Tüm ürün kategorilerini ve müşteri segmentlerini tekrarlar dahil listeleyin."),
    FixtureItem("retail", "For orders with a total between 50 and 150, is the order shipped?",
                "shipped refers to `status` = 'shipped'",
                "SELECT order_id, CASE status WHEN 'shipped' THEN 1 ELSE 0 END AS done FROM orders "
                "WHERE total BETWEEN 50 AND 150",
                "Toplamı 50 ile 150 arasında olan siparişler gönderildi mi?"),
    FixtureItem("retail", "What are the highest and lowest total spendings per customer?",
                "spending per customer is SUM(`total`) grouped by `customer_id`",
                "WITH spend AS (SELECT customer_id, SUM(total) AS s FROM orders GROUP BY customer_id) "
                "SELECT MAX(s), MIN(s) FROM spend",
                "Müşteri başına en yüksek ve en düşük toplam harcama nedir?"),
    FixtureItem("library", "Which books were published before 1950 and who wrote them?",
                "before 1950 refers to `year` < 1950",
                "SELECT b.title, a.name FROM books b INNER JOIN authors a ON a.author_id = b.author_id "
                "WHERE b.year < 1950",
                "Hangi kitaplar 1950 öncesinde yayımlandı ve yazarları kim?"),
    FixtureItem("library", "How many distinct books come from each author country?",
                "country refers to `authors`.`country`",
                "SELECT a.country, COUNT(DISTINCT b.book_id) FROM authors a LEFT JOIN books b "
                "ON b.author_id = a.author_id GROUP BY a.country",
                "Her yazar ülkesinden kaç farklı kitap var?"),
    FixtureItem("library", "List publishers outside 'Turkey' and their nation.",
                "outside refers to `nation` <> 'Turkey'",
                "SELECT p.name, p.nation FROM publishers p WHERE p.nation <> 'Turkey'",
                "'Turkey' dışındaki yayınevlerini ve ülkelerini listeleyin."),
    FixtureItem("library", "Which members hold more than 1 unreturned loan?",
                "unreturned refers to `returned` = 0",
                "SELECT \"Member Name\", COUNT(*) FROM loans WHERE returned = 0 "
                "GROUP BY \"Member Name\" HAVING COUNT(*) > 1",
                "Hangi üyelerin iade edilmemiş 1 taneden fazla ödüncü var?"),
    FixtureItem("library", "What is the title of the most expensive book?",
                "most expensive refers to MAX(`price`)",
                "SELECT title FROM books WHERE price = (SELECT MAX(price) FROM books)",
                "En pahalı kitabın başlığı nedir?"),
    FixtureItem("library", "Name 5 books that were never loaned, alphabetically.",
                "never loaned means the `book_id` is absent from `loans`",
                "SELECT b.title FROM books b WHERE b.book_id NOT IN (SELECT book_id FROM loans) "
                "ORDER BY b.title LIMIT 5",
                "Hiç ödünç verilmemiş 5 kitabı alfabetik olarak adlandırın."),
    FixtureItem("library", "How many books were published in each century?",
                "century = CAST(`year` / 100 AS INTEGER) + 1",
                "SELECT CAST(year / 100 AS INTEGER) + 1 AS century, COUNT(*) FROM books GROUP BY century",
                "Her yüzyılda kaç kitap yayımlandı?"),
    FixtureItem("library", "Which authors whose country is recorded as 'country' have at least one book?",
                "recorded as 'country' refers to `country` = 'country'",
                "SELECT a.name FROM authors a WHERE a.country = 'country' AND EXISTS "
                "(SELECT 1 FROM books b WHERE b.author_id = a.author_id)",
                "Ülkesi 'country' olarak kayıtlı ve en az bir kitabı olan yazarlar hangileri?"),
    FixtureItem("library", "Which books were loaned since 2024-01-01 and by whom?",
                "since 2024-01-01 refers to `loan_date` >= '2024-01-01'",
                "WITH recent AS (SELECT * FROM loans WHERE loan_date >= '2024-01-01') "
                "SELECT b.title, r.\"Member Name\" FROM recent r JOIN books b ON b.book_id = r.book_id",
                "2024-01-01 tarihinden beri hangi kitaplar kimlere ödünç verildi?"),
    FixtureItem("library", "List all authors and publishers based in 'Turkey' by name.",
                "based in 'Turkey' refers to `country` = 'Turkey' or `nation` = 'Turkey'",
                "SELECT name FROM authors WHERE country = 'Turkey' UNION "
                "SELECT name FROM publishers WHERE nation = 'Turkey' ORDER BY name",
                "'Turkey' merkezli tüm yazarları ve yayınevlerini ada göre listeleyin."),
    FixtureItem("library", "What are the average price (2 decimals) and the year range of books with a publisher?",
                "with a publisher refers to `publisher_id` IS NOT NULL",
                "SELECT ROUND(AVG(price), 2), MIN(year), MAX(year) FROM books WHERE publisher_id IS NOT NULL",
                "Yayınevi olan kitapların ortalama fiyatı (2 ondalık) ve yıl aralığı nedir?"),
    FixtureItem("library", "Which returned loans belong to which book titles?",
                "returned refers to `returned` = 1",
                "SELECT l.loan_id, b.title FROM loans l, books b WHERE l.book_id = b.book_id AND l.returned = 1",
                "İade edilmiş hangi ödünçler hangi kitap başlıklarına ait?"),
]

_CITIES = ["Ankara", "Izmir", "Bursa", "Konya", "age"]
_NAMES = ["Ada", "Baris", "Cem", "Deniz", "Ece", "Firat", "Gul", "Hakan", "Ilke", "Kaan", "Lale", "Mert"]


def _populate(db_id: str, conn: sqlite3.Connection, rng: random.Random) -> None:
    ins = conn.executemany
    if db_id == "school":
        ins("INSERT INTO students VALUES (?, ?, ?, ?, ?)",
            [(i, _NAMES[i - 1], rng.randint(17, 26), rng.choice(_CITIES),
              f"2023-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}") for i in range(1, 13)])
        ins("INSERT INTO courses VALUES (?, ?, ?, ?)",
            [(1, "Algebra", 4, "basic"), (2, "Databases", 6, "advanced"), (3, "History", 3, "basic"),
             (4, "Compilers", 5, "advanced"), (5, "Poetry", 2, "basic")])
        ins("INSERT INTO enrollments VALUES (?, ?, ?)",
            [(rng.randint(1, 12), rng.randint(1, 4), round(rng.uniform(30, 100), 1)) for _ in range(30)])
    elif db_id == "retail":
        ins("INSERT INTO customers VALUES (?, ?, ?, ?)",
            [(i, _NAMES[i - 1], rng.choice(["retail", "corporate", "public"]), rng.choice(_CITIES))
             for i in range(1, 11)])
        ins("INSERT INTO products VALUES (?, ?, ?, ?)",
            [(i, f"product {i}", rng.choice(["toys", "books", "tools"]), round(rng.uniform(2, 60), 2))
             for i in range(1, 9)])
        ins("INSERT INTO orders VALUES (?, ?, ?, ?, ?)",
            [(i, rng.randint(1, 8), f"{rng.choice([2023, 2024])}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
              round(rng.uniform(10, 250), 2), rng.choice(["shipped", "pending", "cancelled"]))
             for i in range(1, 26)])
        ins("INSERT INTO order_items VALUES (?, ?, ?)",
            [(rng.randint(1, 25), rng.randint(1, 8), rng.randint(1, 5)) for _ in range(40)])
    else:
        ins("INSERT INTO authors VALUES (?, ?, ?)",
            [(i, _NAMES[i - 1], rng.choice(["Turkey", "France", "Chile", "country"])) for i in range(1, 9)])
        ins("INSERT INTO publishers VALUES (?, ?, ?)",
            [(1, "Yapi", "Turkey"), (2, "Gallimard", "France"), (3, "Iletisim", "Turkey"),
             (4, "Penguin", "UK")])
        ins("INSERT INTO books VALUES (?, ?, ?, ?, ?, ?)",
            [(i, f"book {i:02d}", rng.randint(1, 8), rng.choice([1, 2, 3, 4, None]),
              rng.randint(1890, 2020), round(rng.uniform(5, 80), 2)) for i in range(1, 21)])
        ins("INSERT INTO loans VALUES (?, ?, ?, ?, ?)",
            [(i, rng.randint(1, 14), rng.choice(_NAMES[:5]),
              f"{rng.choice([2023, 2024])}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
              rng.randint(0, 1)) for i in range(1, 19)])


class FixturePaths(NamedTuple):
    corpus: Path
    db_dir: Path
    dictionary: Path


def write_databases(db_dir, seed: int = 7) -> None:
    db_dir = Path(db_dir)
    for db_id, ddl in SCHEMAS.items():
        path = db_dir / db_id / f"{db_id}.sqlite"
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.exists():
            path.unlink()
        conn = sqlite3.connect(path)
        try:
            conn.executescript(ddl)
            _populate(db_id, conn, random.Random(f"{seed}:{db_id}"))
            conn.commit()
        finally:
            conn.close()


def corpus_records() -> list[dict]:
    return [{"question_id": i, "db_id": it.db_id, "question": it.question,
             "evidence": it.evidence, "SQL": it.sql} for i, it in enumerate(ITEMS)]


def dictionary() -> dict:
    return {"identifiers": IDENTIFIERS, "db_ids": DB_IDS,
            "texts": {it.question: it.question_tr for it in ITEMS}}


def write_fixture(root, seed: int = 7) -> FixturePaths:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_databases(root / "databases", seed)
    corpus = root / "corpus.jsonl"
    corpus.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in corpus_records()),
                      encoding="utf-8")
    dict_file = root / "dictionary.json"
    dict_file.write_text(json.dumps(dictionary(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return FixturePaths(corpus, root / "databases", dict_file)
