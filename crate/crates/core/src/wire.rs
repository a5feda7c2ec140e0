//! Message framing: one tag byte followed by u32-BE length-prefixed fields.

use crate::error::Reject;

pub const TAG_J_REGISTER: u8 = 0x01;
pub const TAG_J_LOGIN: u8 = 0x02;
pub const TAG_J_REPLY: u8 = 0x03;
pub const TAG_P_REGISTER: u8 = 0x11;
pub const TAG_P_LOGIN: u8 = 0x12;
pub const TAG_P_REPLY: u8 = 0x13;
pub const TAG_P_CONFIRM: u8 = 0x14;

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(tag: u8) -> Self {
        Writer { buf: vec![tag] }
    }

    pub fn field(mut self, bytes: &[u8]) -> Self {
        self.buf
            .extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn u64(self, v: u64) -> Self {
        self.field(&v.to_be_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    rest: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8], tag: u8) -> Result<Self, Reject> {
        match bytes.split_first() {
            Some((&t, rest)) if t == tag => Ok(Reader { rest }),
            _ => Err(Reject::Malformed),
        }
    }

    pub fn field(&mut self) -> Result<&'a [u8], Reject> {
        if self.rest.len() < 4 {
            return Err(Reject::Malformed);
        }
        let (len, rest) = self.rest.split_at(4);
        let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(Reject::Malformed);
        }
        let (field, rest) = rest.split_at(len);
        self.rest = rest;
        Ok(field)
    }

    pub fn string(&mut self) -> Result<String, Reject> {
        String::from_utf8(self.field()?.to_vec()).map_err(|_| Reject::Malformed)
    }

    pub fn u64(&mut self) -> Result<u64, Reject> {
        let f = self.field()?;
        Ok(u64::from_be_bytes(
            f.try_into().map_err(|_| Reject::Malformed)?,
        ))
    }

    pub fn finish(self) -> Result<(), Reject> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(Reject::Malformed)
        }
    }
}

/// Peeks at a message's tag byte.
pub fn tag_of(bytes: &[u8]) -> Option<u8> {
    bytes.first().copied()
}
