pub mod bimodules;
pub mod category;
pub mod error;
pub mod generators;
pub mod modules;
pub mod numc;
pub mod report;

pub use bimodules::{
    check_full, check_imprimitivity, check_nondegenerate, verify_bimodule, yoneda_bimodule, BiHilbertData, Bimodule,
    BimoduleMap,
};
pub use category::{verify_category, CStarCategory, CStarFunctor, HomSpace, Morphism, Object, ObjectId, ObjectList};
pub use error::{Error, Result};
pub use modules::{HilbertModule, ModuleElement, ModuleOperator};
pub use numc::{CMatrix, Tolerance, C64};
pub use report::{Check, Report};
