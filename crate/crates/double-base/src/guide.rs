//! Guide chapters (filled in alongside the book).
