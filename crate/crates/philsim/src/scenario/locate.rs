/// Line lookup for validation messages. Tables are found by their header
/// line, keys by a `key =` line inside the table.
pub(crate) struct Locator<'a> {
    lines: Vec<&'a str>,
    headers: Vec<(usize, String)>,
}

impl<'a> Locator<'a> {
    pub fn new(text: &'a str) -> Self {
        let lines: Vec<&str> = text.lines().collect();
        let headers = lines
            .iter()
            .enumerate()
            .filter_map(|(i, l)| {
                let t = l.trim();
                let name = t
                    .strip_prefix("[[")
                    .and_then(|r| r.split("]]").next())
                    .or_else(|| t.strip_prefix('[').and_then(|r| r.split(']').next()))?;
                Some((i, name.trim().to_string()))
            })
            .collect();
        Self { lines, headers }
    }

    /// 1-based line of `key` in `table` (the `index`-th one for arrays of
    /// tables); the table header when the key is absent.
    pub fn line(&self, table: &str, index: Option<usize>, key: Option<&str>) -> Option<usize> {
        let start = self
            .headers
            .iter()
            .filter(|(_, n)| n == table)
            .nth(index.unwrap_or(0))
            .map(|(i, _)| *i)?;
        let end = self
            .headers
            .iter()
            .map(|(i, _)| *i)
            .find(|&i| i > start)
            .unwrap_or(self.lines.len());
        let Some(key) = key else {
            return Some(start + 1);
        };
        (start + 1..end)
            .find(|&i| {
                self.lines[i]
                    .trim_start()
                    .strip_prefix(key)
                    .is_some_and(|r| r.trim_start().starts_with('='))
            })
            .or(Some(start))
            .map(|i| i + 1)
    }

    /// 1-based line containing byte `offset`.
    pub fn line_of_offset(text: &str, offset: usize) -> usize {
        text[..offset.min(text.len())].matches('\n').count() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_keys_and_array_tables() {
        let text = "[run]\ndt = 1\n\n[amplifier]\n  delay = \"1 ms\"\n[[cosim.unit]]\nid = \"a\"\n[[cosim.unit]]\nid = \"b\"\n";
        let l = Locator::new(text);
        assert_eq!(l.line("amplifier", None, Some("delay")), Some(5));
        assert_eq!(l.line("amplifier", None, Some("gain")), Some(4));
        assert_eq!(l.line("cosim.unit", Some(1), Some("id")), Some(9));
        assert_eq!(l.line("sweep", None, None), None);
        assert_eq!(Locator::line_of_offset(text, 7), 2);
    }
}
