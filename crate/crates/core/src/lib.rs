//! XTL: one XML-embedded language read two ways. Expanding a template
//! against a repository document instantiates it; validating a document
//! against the same template decides membership in its regular hedge
//! language.
//!
//! ```
//! use xtl::{expand, parse_xml, parse_xtl, validate, xml_repository, ExpansionSettings};
//!
//! let template = parse_xml(br#"<p><xtl:text select="/r/name"/></p>"#).unwrap();
//! let (entry, macros) = parse_xtl(&template).unwrap();
//! let repo = xml_repository(&parse_xml(b"<r><name>Ann</name></r>").unwrap());
//! let out = expand(&entry, &macros, &repo, ExpansionSettings::default()).unwrap();
//! assert_eq!(out.to_string(), "<p>Ann</p>");
//! assert!(validate(&entry, &macros, &out).unwrap().valid);
//! ```

pub mod algebra;
pub mod cli;
pub mod expander;
pub mod hedge;
pub mod reg;
pub mod repo;
pub mod validator;
pub mod xtl;

use thiserror::Error;

pub use algebra::{enumerate_members, member, AlgebraError, SchemaExpr};
pub use expander::{
    expand, expand_detailed, is_fully_expanded, ExpandError, Expansion, ExpansionSettings,
};
pub use hedge::{
    parse_fragment, parse_xml, parse_xml_with, serialize_xml, Element, Hedge, Node, ParseOptions,
    XmlError,
};
pub use reg::{
    canonical_eq, encode_document, first_set, normalize, nullable, MacroTable, Reg, RegError,
};
pub use repo::{parse_query, xml_repository, QueryError, Repository, XmlRepository};
pub use validator::{explain, oracle_validate, validate, Failure, ValidationReport};
pub use xtl::{parse_xtl, serialize_xtl, XtlError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error(transparent)]
    Reg(#[from] RegError),
    #[error(transparent)]
    Xtl(#[from] XtlError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Parses XTL source into its entry term and macro table.
pub fn load_template(src: &[u8], options: ParseOptions) -> Result<(Reg, MacroTable), Error> {
    let doc = parse_xml_with(src, options)?;
    Ok(parse_xtl(&doc)?)
}
