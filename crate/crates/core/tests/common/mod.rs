pub mod bessel_oracle;
pub mod oracle;
