//! Text formats read and written by the command-line tool.
//!
//! Every reader takes the file contents plus a source name used in error
//! messages; every writer returns the full file contents. Tabular formats
//! are UTF-8, tab-separated, and skip blank lines and lines starting with `#`.

pub mod checkpoint;
pub mod config;
pub mod reports;
pub mod rules;
pub mod triples;

/// Non-blank, non-comment lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r')))
        .filter(|(_, line)| !line.trim().is_empty() && !line.starts_with('#'))
}
