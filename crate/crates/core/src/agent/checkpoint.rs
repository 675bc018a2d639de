//! Binary agent checkpoint.
//!
//! Layout (little-endian): magic `RLMAGT`, u16 version, u32 predicates,
//! u32 token_dim, u32 hidden, u32 layers, 32-byte config fingerprint,
//! u64 parameter count, parameters as f32, u64 symbol count, then the base
//! predicate names as length-prefixed strings.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::network::{NetworkShape, ValueNetwork};
use super::AgentError;
use crate::kg::SymbolTable;
use crate::scalar::Scalar;

const MAGIC: &[u8; 6] = b"RLMAGT";
const VERSION: u16 = 1;

pub struct AgentCheckpoint<T> {
    pub network: ValueNetwork<T>,
    pub predicates: SymbolTable,
    pub fingerprint: [u8; 32],
}

pub fn write_agent_checkpoint<T: Scalar, W: Write>(
    mut w: W,
    net: &ValueNetwork<T>,
    predicates: &SymbolTable,
    fingerprint: &[u8; 32],
) -> Result<(), AgentError> {
    let shape = net.shape();
    if shape.predicates != 2 * predicates.len() {
        return Err(AgentError::Checkpoint("symbol table does not match network vocabulary".into()));
    }
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    for v in [shape.predicates, shape.token_dim, shape.hidden, shape.layers] {
        w.write_u32::<LittleEndian>(v as u32)?;
    }
    w.write_all(fingerprint)?;
    w.write_u64::<LittleEndian>(net.num_params() as u64)?;
    for p in net.params() {
        w.write_f32::<LittleEndian>(p.to_f32_lossy())?;
    }
    w.write_u64::<LittleEndian>(predicates.len() as u64)?;
    for name in predicates.names() {
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
    }
    Ok(())
}

pub fn read_agent_checkpoint<T: Scalar, R: Read>(mut r: R) -> Result<AgentCheckpoint<T>, AgentError> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(AgentError::Checkpoint("not an agent checkpoint".into()));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(AgentError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = r.read_u32::<LittleEndian>()? as usize;
    }
    let shape = NetworkShape {
        predicates: dims[0],
        token_dim: dims[1],
        hidden: dims[2],
        layers: dims[3],
    };
    if shape.layers == 0 || shape.hidden == 0 || shape.token_dim == 0 {
        return Err(AgentError::Checkpoint("degenerate network shape".into()));
    }
    let mut fingerprint = [0u8; 32];
    r.read_exact(&mut fingerprint)?;
    let n = r.read_u64::<LittleEndian>()? as usize;
    if n != shape.param_count() {
        return Err(AgentError::Checkpoint(format!(
            "parameter count {n} does not match shape ({})",
            shape.param_count()
        )));
    }
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        params.push(T::from_f32_lossy(r.read_f32::<LittleEndian>()?));
    }
    let network = ValueNetwork::from_params(shape, params).expect("length checked");
    let count = r.read_u64::<LittleEndian>()? as usize;
    let mut predicates = SymbolTable::new();
    for _ in 0..count {
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        let s = String::from_utf8(buf).map_err(|_| AgentError::Checkpoint("symbol is not UTF-8".into()))?;
        predicates.intern(&s);
    }
    if predicates.len() != count || 2 * count != shape.predicates {
        return Err(AgentError::Checkpoint("symbol table does not match network vocabulary".into()));
    }
    Ok(AgentCheckpoint {
        network,
        predicates,
        fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let shape = NetworkShape {
            predicates: 4,
            token_dim: 3,
            hidden: 2,
            layers: 2,
        };
        let net = ValueNetwork::<f32>::new(shape, 3);
        let preds = SymbolTable::from_names(["p", "q"]);
        let fp = [7u8; 32];
        let mut buf = Vec::new();
        write_agent_checkpoint(&mut buf, &net, &preds, &fp).unwrap();
        let back: AgentCheckpoint<f32> = read_agent_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.network, net);
        assert_eq!(back.predicates, preds);
        assert_eq!(back.fingerprint, fp);
        assert!(read_agent_checkpoint::<f32, _>(&buf[..buf.len() - 1]).is_err());
        let bad = SymbolTable::from_names(["p"]);
        assert!(write_agent_checkpoint(Vec::new(), &net, &bad, &fp).is_err());
    }
}
