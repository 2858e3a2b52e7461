pub mod bratteli;
pub mod cantor;
pub mod crossed;
pub mod json;
pub mod linalg;
pub mod verify;
