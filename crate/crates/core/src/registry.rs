//! Durable storage for the improved scheme's server state, and the
//! transcript text format.
//!
//! Record-table layout (all integers big-endian):
//!
//! ```text
//! "APLAB01" | version u8 (=1) | params id u8 | key flag u8 | [key len u16 | key]
//! row count u32 | rows... | SHA-1 of every preceding byte (20 bytes)
//!
//! row = nid [16] | N u64 | ID_SC [16] | status u8 | id len u32 | id
//! ```
//!
//! Transcripts are text, one event per line, tab-separated:
//! `tick  direction  party  payload-hex  h,E,M,X`.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use sha1::{Digest as _, Sha1};

use crate::clock::Party;
use crate::counter::OpCounts;
use crate::crypto::{GroupParams, Scalar, SecurityLabel};
use crate::error::StoreError;
use crate::proposed::{Nid, PServerState, RecordStatus, UserRecord, CARD_SECRET_LEN, NID_LEN};

pub const MAGIC: &[u8; 7] = b"APLAB01";
pub const VERSION: u8 = 1;
const CHECKSUM_LEN: usize = 20;
const TRANSCRIPT_HEADER: &str = "# authlab transcript v1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SaveOptions {
    /// Write the master key into the file. Off by default.
    pub persist_master_key: bool,
    /// Overwrite an existing file even if it fails its checksum.
    pub force: bool,
}

pub fn encode_state(server: &PServerState, persist_master_key: bool) -> Vec<u8> {
    let params = server.params();
    let mut out = MAGIC.to_vec();
    out.push(VERSION);
    out.push(params.label().id());
    if persist_master_key {
        let key = params.encode_scalar(server.master_key());
        out.push(1);
        out.extend_from_slice(&(key.len() as u16).to_be_bytes());
        out.extend_from_slice(&key);
    } else {
        out.push(0);
    }
    out.extend_from_slice(&(server.records().len() as u32).to_be_bytes());
    for rec in server.records().values() {
        out.extend_from_slice(&rec.nid.0);
        out.extend_from_slice(&rec.n.to_be_bytes());
        out.extend_from_slice(&rec.id_sc);
        out.push(match rec.status {
            RecordStatus::Active => 0,
            RecordStatus::Revoked => 1,
        });
        out.extend_from_slice(&(rec.id.len() as u32).to_be_bytes());
        out.extend_from_slice(rec.id.as_bytes());
    }
    let sum = Sha1::digest(&out);
    out.extend_from_slice(&sum);
    out
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        if self.0.len() < n {
            return Err(StoreError::Malformed("unexpected end of file"));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, StoreError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Checks magic, version and checksum; returns the body without checksum.
fn verify(bytes: &[u8]) -> Result<&[u8], StoreError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    match bytes.get(MAGIC.len()) {
        Some(&VERSION) => {}
        Some(&v) => return Err(StoreError::UnsupportedVersion(v)),
        None => return Err(StoreError::Malformed("missing version")),
    }
    if bytes.len() < MAGIC.len() + 1 + CHECKSUM_LEN {
        return Err(StoreError::Malformed("missing checksum"));
    }
    let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha1::digest(body).as_slice() != sum {
        return Err(StoreError::ChecksumMismatch);
    }
    Ok(body)
}

pub fn decode_state(bytes: &[u8], master_key: Option<&Scalar>) -> Result<PServerState, StoreError> {
    let body = verify(bytes)?;
    let mut c = Cursor(&body[MAGIC.len() + 1..]);
    let label =
        SecurityLabel::from_id(c.u8()?).ok_or(StoreError::Malformed("unknown params id"))?;
    let params = GroupParams::for_label(label);
    let stored_key = match c.u8()? {
        0 => None,
        1 => {
            let len = c.u16()? as usize;
            let raw = c.take(len)?;
            Some(
                params
                    .decode_scalar(raw)
                    .map_err(|_| StoreError::Malformed("master key"))?,
            )
        }
        _ => return Err(StoreError::Malformed("key flag")),
    };
    let x = match (master_key, stored_key) {
        (Some(k), _) => k.clone(),
        (None, Some(k)) => k,
        (None, None) => return Err(StoreError::MissingMasterKey),
    };
    let count = c.u32()?;
    let mut rows = Vec::with_capacity(count.min(1 << 16) as usize);
    for _ in 0..count {
        let nid = Nid::from_slice(c.take(NID_LEN)?).unwrap();
        let n = c.u64()?;
        let id_sc: [u8; CARD_SECRET_LEN] = c.take(CARD_SECRET_LEN)?.try_into().unwrap();
        let status = match c.u8()? {
            0 => RecordStatus::Active,
            1 => RecordStatus::Revoked,
            _ => return Err(StoreError::Malformed("record status")),
        };
        let id_len = c.u32()? as usize;
        let id = String::from_utf8(c.take(id_len)?.to_vec())
            .map_err(|_| StoreError::Malformed("identity is not utf-8"))?;
        rows.push(UserRecord {
            nid,
            n,
            id_sc,
            id,
            status,
        });
    }
    if !c.0.is_empty() {
        return Err(StoreError::Malformed("trailing bytes"));
    }
    Ok(PServerState::from_records(params, x, rows))
}

pub fn save_state(server: &PServerState, path: &Path, opts: SaveOptions) -> Result<(), StoreError> {
    save_state_with_hook(server, path, opts, || Ok(()))
}

/// Like [`save_state`], calling `before_rename` after the temporary file is
/// written and before it replaces `path`. An error from the hook aborts the
/// save and leaves any existing file untouched.
pub fn save_state_with_hook<F>(
    server: &PServerState,
    path: &Path,
    opts: SaveOptions,
    before_rename: F,
) -> Result<(), StoreError>
where
    F: FnOnce() -> io::Result<()>,
{
    if !opts.force {
        match fs::read(path) {
            Ok(existing) => {
                if verify(&existing).is_err() {
                    return Err(StoreError::RefuseOverwrite(path.display().to_string()));
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
    }
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&encode_state(server, opts.persist_master_key))?;
    tmp.as_file().sync_all()?;
    before_rename()?;
    tmp.persist(path).map_err(|e| StoreError::Io(e.error))?;
    Ok(())
}

pub fn load_state(path: &Path, master_key: Option<&Scalar>) -> Result<PServerState, StoreError> {
    decode_state(&fs::read(path)?, master_key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    ToServer,
    ToClient,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::ToServer => "to-server",
            Direction::ToClient => "to-client",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEvent {
    pub tick: u64,
    pub direction: Direction,
    /// Who put the message on the wire.
    pub party: Party,
    pub payload: Vec<u8>,
    pub counts: OpCounts,
}

/// Append-only log of channel traffic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    events: Vec<TranscriptEvent>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: TranscriptEvent) {
        self.events.push(event);
    }

    pub fn extend(&mut self, other: &Transcript) {
        self.events.extend(other.events.iter().cloned());
    }

    pub fn events(&self) -> &[TranscriptEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{TRANSCRIPT_HEADER}")?;
        for e in &self.events {
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}",
                e.tick,
                e.direction.as_str(),
                e.party.as_str(),
                hex::encode(&e.payload),
                e.counts
            )?;
        }
        Ok(())
    }
}

impl FromStr for Transcript {
    type Err = StoreError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, msg: String| StoreError::Parse { line, msg };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, TRANSCRIPT_HEADER)) => {}
            _ => return Err(err(1, "missing transcript header".into())),
        }
        let mut t = Transcript::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(err(
                    lineno,
                    format!("expected 5 fields, found {}", fields.len()),
                ));
            }
            let tick = fields[0]
                .parse()
                .map_err(|e| err(lineno, format!("tick: {e}")))?;
            let direction = match fields[1] {
                "to-server" => Direction::ToServer,
                "to-client" => Direction::ToClient,
                other => return Err(err(lineno, format!("unknown direction '{other}'"))),
            };
            let party = Party::parse(fields[2])
                .ok_or_else(|| err(lineno, format!("unknown party '{}'", fields[2])))?;
            let payload =
                hex::decode(fields[3]).map_err(|e| err(lineno, format!("payload: {e}")))?;
            let counts = fields[4].parse().map_err(|e| err(lineno, e))?;
            t.push(TranscriptEvent {
                tick,
                direction,
                party,
                payload,
                counts,
            });
        }
        Ok(t)
    }
}

pub fn export_transcript(t: &Transcript, path: &Path) -> Result<(), StoreError> {
    fs::write(path, t.to_string())?;
    Ok(())
}

pub fn import_transcript(path: &Path) -> Result<Transcript, StoreError> {
    fs::read_to_string(path)?.parse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::OpCounter;
    use crate::crypto::seeded_rng;
    use crate::proposed::begin_registration;

    fn server_with_users(n: usize) -> PServerState {
        let mut rng = seeded_rng(21);
        let mut s = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let params = s.params().clone();
        let mut ops = OpCounter::new();
        for i in 0..n {
            let (req, _) =
                begin_registration(&params, &format!("user{i}"), "pw", &mut rng, &mut ops);
            s.register(&req, &mut rng, &mut ops).unwrap();
        }
        s
    }

    #[test]
    fn roundtrip_with_and_without_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        let s = server_with_users(5);
        save_state(
            &s,
            &path,
            SaveOptions {
                persist_master_key: true,
                force: false,
            },
        )
        .unwrap();
        assert_eq!(load_state(&path, None).unwrap(), s);

        save_state(&s, &path, SaveOptions::default()).unwrap();
        assert!(matches!(
            load_state(&path, None),
            Err(StoreError::MissingMasterKey)
        ));
        assert_eq!(load_state(&path, Some(s.master_key())).unwrap(), s);
    }

    #[test]
    fn empty_server_is_header_and_trailer() {
        let s = server_with_users(0);
        let bytes = encode_state(&s, false);
        // magic, version, label, key flag, row count, checksum
        assert_eq!(bytes.len(), 7 + 1 + 1 + 1 + 4 + 20);
        assert_eq!(decode_state(&bytes, Some(s.master_key())).unwrap(), s);
    }

    #[test]
    fn corruption_is_detected() {
        let s = server_with_users(3);
        let bytes = encode_state(&s, true);
        for i in MAGIC.len() + 1..bytes.len() {
            let mut bad = bytes.clone();
            bad[i] ^= 0x01;
            assert!(
                matches!(decode_state(&bad, None), Err(StoreError::ChecksumMismatch)),
                "byte {i}"
            );
        }
        let mut bad = bytes.clone();
        bad[MAGIC.len()] = 2;
        assert!(matches!(
            decode_state(&bad, None),
            Err(StoreError::UnsupportedVersion(2))
        ));
        assert!(matches!(
            decode_state(b"nope", None),
            Err(StoreError::BadMagic)
        ));
    }

    #[test]
    fn refuses_to_clobber_corrupt_file_without_force() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        fs::write(&path, b"garbage").unwrap();
        let s = server_with_users(1);
        assert!(matches!(
            save_state(&s, &path, SaveOptions::default()),
            Err(StoreError::RefuseOverwrite(_))
        ));
        save_state(
            &s,
            &path,
            SaveOptions {
                force: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(load_state(&path, Some(s.master_key())).unwrap(), s);
    }

    #[test]
    fn crash_before_rename_keeps_old_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        let old = server_with_users(2);
        save_state(
            &old,
            &path,
            SaveOptions {
                persist_master_key: true,
                force: false,
            },
        )
        .unwrap();
        let before = fs::read(&path).unwrap();

        let new = server_with_users(4);
        let res = save_state_with_hook(&new, &path, SaveOptions::default(), || {
            Err(io::Error::other("injected crash"))
        });
        assert!(res.is_err());
        assert_eq!(fs::read(&path).unwrap(), before);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    fn sample_transcript() -> Transcript {
        let mut t = Transcript::new();
        t.push(TranscriptEvent {
            tick: 3,
            direction: Direction::ToServer,
            party: Party::Client,
            payload: vec![0x12, 0, 1],
            counts: OpCounts {
                hash: 5,
                exp: 1,
                mul: 0,
                xor: 2,
            },
        });
        t.push(TranscriptEvent {
            tick: 4,
            direction: Direction::ToClient,
            party: Party::Adversary,
            payload: vec![],
            counts: OpCounts::default(),
        });
        t
    }

    #[test]
    fn transcript_roundtrip_via_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        let t = sample_transcript();
        export_transcript(&t, &path).unwrap();
        assert_eq!(import_transcript(&path).unwrap(), t);
    }

    #[test]
    fn transcript_errors_carry_line_numbers() {
        let text = sample_transcript().to_string();
        let broken = text.replace("to-client", "sideways");
        match broken.parse::<Transcript>() {
            Err(StoreError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let broken = text.replace("120001", "12zz01");
        assert!(matches!(
            broken.parse::<Transcript>(),
            Err(StoreError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            "".parse::<Transcript>(),
            Err(StoreError::Parse { line: 1, .. })
        ));
    }
}
