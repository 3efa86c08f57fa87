pub mod lp;
pub mod qp;
pub mod smo;
pub mod svc_lp;
