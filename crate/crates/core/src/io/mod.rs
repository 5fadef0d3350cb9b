pub mod pnml;
pub mod ptpnml;
pub mod text;
