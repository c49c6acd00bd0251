//! Whitespace-separated ASCII headers shared by the netpbm-style formats.

use crate::error::ParseError;

pub(crate) struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Next token, skipping whitespace and `#` comments.
    pub(crate) fn token(&mut self, field: &'static str) -> Result<&'a str, ParseError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(ParseError::new(field, "missing")),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| ParseError::new(field, "not ASCII"))
    }

    pub(crate) fn dimension(&mut self, field: &'static str) -> Result<usize, ParseError> {
        let tok = self.token(field)?;
        match tok.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(ParseError::new(field, format!("{tok:?} is not a positive integer"))),
        }
    }

    /// Consumes the single whitespace byte that ends the header and returns
    /// the payload.
    pub(crate) fn payload(self, field: &'static str) -> Result<&'a [u8], ParseError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(ParseError::new(field, "header not terminated by whitespace")),
        }
    }
}
