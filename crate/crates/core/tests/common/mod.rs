#![allow(dead_code)]

use iw_core::table::{load_table_from_str, Schema, Table};

pub const CONSOLE_CSV: &str = include_str!("../data/console_sales.csv");
pub const CONSOLE_SCHEMA: &str = include_str!("../data/console_schema.json");

pub fn console_schema() -> Schema {
    serde_json::from_str(CONSOLE_SCHEMA).unwrap()
}

pub fn console_table() -> Table {
    load_table_from_str(CONSOLE_CSV, Some(&console_schema())).unwrap()
}
