#![allow(dead_code)]

pub mod direct;
pub mod dvi;
pub mod ocr;
