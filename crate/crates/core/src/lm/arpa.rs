//! ARPA back-off model files. Values in the file are log10; the model keeps log2.

use std::f64::consts::LOG10_2;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Entry, ModelVocab, NGramModel, NGramTable, UNK_ID};
use crate::error::{Error, Result};

/// log10 value written for entries that are contexts only.
const NEVER: &str = "-99";

fn fmt_log10(log2: f64) -> String {
    format!("{:.9}", log2 * LOG10_2)
}

pub fn write_arpa<W: Write>(model: &NGramModel, mut w: W) -> std::io::Result<()> {
    let vocab = model.vocab();
    writeln!(w, "\\data\\")?;
    for n in 1..=model.order() {
        writeln!(w, "ngram {n}={}", model.table(n).len())?;
    }
    for n in 1..=model.order() {
        writeln!(w)?;
        writeln!(w, "\\{n}-grams:")?;
        let mut rows: Vec<(Vec<&str>, &Entry)> = model
            .table(n)
            .iter()
            .map(|(gram, e)| (gram.iter().map(|&id| vocab.token(id)).collect(), e))
            .collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for (words, e) in rows {
            let prob = if e.is_event() {
                fmt_log10(e.log2_prob)
            } else {
                NEVER.to_owned()
            };
            write!(w, "{prob}\t{}", words.join(" "))?;
            if let Some(bo) = e.log2_backoff {
                write!(w, "\t{}", fmt_log10(bo))?;
            }
            writeln!(w)?;
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")?;
    Ok(())
}

pub fn export_arpa(model: &NGramModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_arpa(model, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn import_arpa(path: impl AsRef<Path>) -> Result<NGramModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_arpa(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
    peeked: Option<String>,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        if let Some(l) = self.peeked.take() {
            return Ok(Some(l));
        }
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(l)) => {
                self.line_no += 1;
                Ok(Some(l.trim_end().to_owned()))
            }
            Some(Err(e)) => Err(Error::io("<arpa>", e)),
        }
    }

    fn next_nonblank(&mut self) -> Result<Option<String>> {
        while let Some(l) = self.next_line()? {
            if !l.is_empty() {
                return Ok(Some(l));
            }
        }
        Ok(None)
    }
}

fn err(section: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Arpa {
        section: section.to_owned(),
        line,
        message: message.into(),
    }
}

fn parse_log10(field: &str, section: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| err(section, line, format!("bad number `{field}`")))?;
    if !v.is_finite() {
        return Err(err(section, line, format!("non-finite value `{field}`")));
    }
    Ok(v)
}

pub fn read_arpa<R: BufRead>(reader: R) -> Result<NGramModel> {
    let mut lines = Lines {
        inner: reader.lines(),
        line_no: 0,
        peeked: None,
    };

    let header = "\\data\\";
    match lines.next_nonblank()? {
        Some(l) if l == header => {}
        _ => return Err(err(header, lines.line_no, "missing \\data\\ header")),
    }
    let mut declared = Vec::new();
    loop {
        let Some(l) = lines.next_nonblank()? else {
            return Err(err(header, lines.line_no, "file ends inside header"));
        };
        let Some(rest) = l.strip_prefix("ngram ") else {
            lines.peeked = Some(l);
            break;
        };
        let (n, count) = rest
            .split_once('=')
            .and_then(|(n, c)| Some((n.trim().parse::<usize>().ok()?, c.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| err(header, lines.line_no, format!("malformed count line `{l}`")))?;
        if n != declared.len() + 1 {
            return Err(err(header, lines.line_no, format!("unexpected order {n}")));
        }
        declared.push(count);
    }
    if declared.is_empty() {
        return Err(err(header, lines.line_no, "no ngram counts"));
    }

    let order = declared.len();
    let mut vocab = ModelVocab::default();
    let mut tables: Vec<NGramTable> = Vec::with_capacity(order);
    for (idx, &count) in declared.iter().enumerate() {
        let n = idx + 1;
        let section = format!("\\{n}-grams:");
        match lines.next_nonblank()? {
            Some(l) if l == section => {}
            Some(l) => {
                return Err(err(
                    &section,
                    lines.line_no,
                    format!("expected section header, found `{l}`"),
                ))
            }
            None => return Err(err(&section, lines.line_no, "missing section (truncated file)")),
        }
        let mut table = NGramTable::default();
        table.reserve(count);
        let mut key = Vec::with_capacity(n);
        for seen in 0..count {
            let l = match lines.next_line()? {
                Some(l) if !l.is_empty() && !l.starts_with('\\') => l,
                _ => {
                    return Err(err(
                        &section,
                        lines.line_no,
                        format!("declared {count} entries, found {seen}"),
                    ))
                }
            };
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.len() != n + 1 && fields.len() != n + 2 {
                return Err(err(&section, lines.line_no, format!("expected {n} words")));
            }
            let log10 = parse_log10(fields[0], &section, lines.line_no)?;
            key.clear();
            for &word in &fields[1..=n] {
                let id = if n == 1 {
                    vocab.intern(word)
                } else {
                    vocab
                        .get(word)
                        .ok_or_else(|| err(&section, lines.line_no, format!("word `{word}` missing from unigrams")))?
                };
                key.push(id);
            }
            let backoff = match fields.get(n + 1) {
                Some(f) => Some(parse_log10(f, &section, lines.line_no)? / LOG10_2),
                None => None,
            };
            let log2_prob = if log10 <= -99.0 {
                f64::NEG_INFINITY
            } else {
                log10 / LOG10_2
            };
            let entry = Entry {
                log2_prob,
                log2_backoff: backoff,
            };
            if table.insert(key.as_slice().into(), entry).is_some() {
                return Err(err(&section, lines.line_no, "duplicate n-gram"));
            }
        }
        if let Some(l) = lines.next_line()? {
            if !l.is_empty() && !l.starts_with('\\') {
                return Err(err(&section, lines.line_no, format!("more than {count} entries")));
            }
            lines.peeked = Some(l);
        }
        if n == 1 && !table.get(&[UNK_ID][..]).is_some_and(|e| e.is_event()) {
            return Err(err(&section, lines.line_no, "missing <unk> unigram"));
        }
        tables.push(table);
    }
    match lines.next_nonblank()? {
        Some(l) if l == "\\end\\" => {}
        _ => return Err(err("\\end\\", lines.line_no, "missing \\end\\ marker (truncated file)")),
    }
    Ok(NGramModel::from_parts(order, vocab, tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Side};
    use crate::lm::train;

    fn model() -> NGramModel {
        let c = Corpus::from_sentences(
            ["the cat sat", "the dog sat", "a cat ran", "the cat ran fast"],
            Side::Source,
            "t",
        )
        .unwrap();
        train(&c, 3).unwrap()
    }

    fn export(m: &NGramModel) -> String {
        let mut buf = Vec::new();
        write_arpa(m, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn layout() {
        let text = export(&model());
        assert!(text.starts_with("\\data\\\nngram 1="));
        assert!(text.contains("\n\\1-grams:\n"));
        assert!(text.contains("\n\\3-grams:\n"));
        assert!(text.ends_with("\n\\end\\\n"));
        assert!(text.contains("-99\t<s>\t"));
    }

    #[test]
    fn reexport_is_byte_identical() {
        let first = export(&model());
        let m2 = read_arpa(first.as_bytes()).unwrap();
        assert_eq!(export(&m2), first);
    }

    #[test]
    fn truncated_file_names_section() {
        let text = export(&model());
        let cut = text.find("\\3-grams:").unwrap() + 40;
        let err = read_arpa(&text.as_bytes()[..cut]).unwrap_err();
        assert!(err.to_string().contains("\\3-grams:"), "{err}");

        let no_end = text.replace("\\end\\\n", "");
        let err = read_arpa(no_end.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("\\end\\"), "{err}");
    }

    #[test]
    fn malformed_header_and_counts() {
        assert!(read_arpa("ngram 1=2\n".as_bytes()).is_err());
        let text = export(&model());
        let bad = text.replacen("ngram 2=", "ngram 2=1", 1);
        let err = read_arpa(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("\\2-grams:"), "{err}");
    }
}
