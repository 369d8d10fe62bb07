#![allow(dead_code)]

pub mod enumeration;
