//! Binary embedding checkpoint.
//!
//! Layout (little-endian): magic `RLMEMB`, u16 version, u8 kind, u32 dim,
//! f64 eta, u64 entity count, u64 predicate count, entity matrix and
//! predicate matrix as row-major f32, then both symbol tables as
//! length-prefixed (u32) UTF-8 strings.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{EmbeddingError, EmbeddingModel, ModelKind};
use crate::kg::SymbolTable;
use crate::scalar::Scalar;

const MAGIC: &[u8; 6] = b"RLMEMB";
const VERSION: u16 = 1;

pub struct EmbeddingCheckpoint<T> {
    pub model: EmbeddingModel<T>,
    pub entities: SymbolTable,
    pub predicates: SymbolTable,
}

pub(crate) fn write_strings<W: Write>(w: &mut W, table: &SymbolTable) -> std::io::Result<()> {
    for name in table.names() {
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_strings<R: Read>(r: &mut R, n: usize) -> Result<SymbolTable, EmbeddingError> {
    let mut table = SymbolTable::new();
    for _ in 0..n {
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        let s = String::from_utf8(buf).map_err(|_| EmbeddingError::Checkpoint("symbol is not UTF-8".into()))?;
        table.intern(&s);
    }
    if table.len() != n {
        return Err(EmbeddingError::Checkpoint("duplicate symbol".into()));
    }
    Ok(table)
}

pub fn write_checkpoint<T: Scalar, W: Write>(
    mut w: W,
    model: &EmbeddingModel<T>,
    entities: &SymbolTable,
    predicates: &SymbolTable,
) -> Result<(), EmbeddingError> {
    if entities.len() != model.num_entities() || predicates.len() != model.num_base_predicates() {
        return Err(EmbeddingError::Checkpoint("symbol tables do not match model shape".into()));
    }
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u8(match model.kind() {
        ModelKind::TransE => 0,
        ModelKind::DiagonalBilinear => 1,
    })?;
    w.write_u32::<LittleEndian>(model.dim() as u32)?;
    w.write_f64::<LittleEndian>(model.eta())?;
    w.write_u64::<LittleEndian>(model.num_entities() as u64)?;
    w.write_u64::<LittleEndian>(model.num_base_predicates() as u64)?;
    for v in model.entity_matrix().iter().chain(model.predicate_matrix()) {
        w.write_f32::<LittleEndian>(v.to_f32_lossy())?;
    }
    write_strings(&mut w, entities)?;
    write_strings(&mut w, predicates)?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R) -> Result<EmbeddingCheckpoint<T>, EmbeddingError> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(EmbeddingError::Checkpoint("not an embedding checkpoint".into()));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(EmbeddingError::Checkpoint(format!("unsupported version {version}")));
    }
    let kind = match r.read_u8()? {
        0 => ModelKind::TransE,
        1 => ModelKind::DiagonalBilinear,
        k => return Err(EmbeddingError::Checkpoint(format!("unknown model kind {k}"))),
    };
    let dim = r.read_u32::<LittleEndian>()? as usize;
    let eta = r.read_f64::<LittleEndian>()?;
    let n_ent = r.read_u64::<LittleEndian>()? as usize;
    let n_pred = r.read_u64::<LittleEndian>()? as usize;
    let mut read_matrix = |n: usize| -> Result<Vec<T>, EmbeddingError> {
        (0..n)
            .map(|_| Ok(T::from_f32_lossy(r.read_f32::<LittleEndian>()?)))
            .collect()
    };
    let ent = read_matrix(n_ent * dim)?;
    let rel = read_matrix(n_pred * dim)?;
    let model = EmbeddingModel::from_parts(kind, dim, eta, ent, rel)?;
    let entities = read_strings(&mut r, n_ent)?;
    let predicates = read_strings(&mut r, n_pred)?;
    Ok(EmbeddingCheckpoint {
        model,
        entities,
        predicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_for_f32() {
        let model = EmbeddingModel::<f32>::from_parts(
            ModelKind::TransE,
            2,
            12.0,
            vec![0.25, -1.5, 3.0, 0.125],
            vec![1.0, -0.5],
        )
        .unwrap();
        let ents = SymbolTable::from_names(["a", "b"]);
        let preds = SymbolTable::from_names(["P"]);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &model, &ents, &preds).unwrap();
        let back: EmbeddingCheckpoint<f32> = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.model, model);
        assert_eq!(back.entities, ents);
        assert_eq!(back.predicates, preds);
        assert!(read_checkpoint::<f32, _>(&buf[..10]).is_err());
        assert!(read_checkpoint::<f32, _>(&b"NOTEMBxxxxxxxxxxxxxxxx"[..]).is_err());
    }
}
