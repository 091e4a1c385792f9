//! Embedded DSA domain parameters (L = 3072, N = 256).
//!
//! Generated once with `dsa::Components::generate` and checked offline:
//! p and q are prime, q divides p - 1 and g has order q.

pub(crate) const P_HEX: &[&str] = &[
    "ff697653e96897a6083e5801223193352c82a41882584764e9340371017bbc5c",
    "b6cd5a1bf8271b0893490c398e32073b8a5a71aa70d3c8c9951db1382c194ca9",
    "cb179525b044f9bab0e8da7a649dd1f5fb70e339ec7dc7ab394e9757c450b3b7",
    "ccdcd6f17a085a296451aaa3080ea7def6a7c594359d22cd2443e953edd51f2b",
    "1852046c43d02fee97fec18934a9513d7224d0b8dd92dc9fa0cfa24bfc391ded",
    "fae3dceef0b195092001daf0b8cafcaa74a32f14cc193e001c06ccd7658ad524",
    "8b6f10990571e14ab009778c497e4e4545ec1c1af8cd446957ad17789dbb83d4",
    "4ee43b925bd1d0a13b05b6a02aa2b9c5159bee7924f95ce62812827772747d84",
    "b7b946e30fa7addbbd9d8d146dc953f67df69b7994b7140822f7b1b0778c7da6",
    "209b11c74e73274a974f57721b73698993a09cba7ad9f3249defb6466942fba3",
    "9e3f191cc199b1c11df189f8bbcee6dea3f5f9fa7de13472c8f0882a8f2828a8",
    "9128552b4fd8757bbbaa6bbefb5d61ac0c4e000681dfca5afcd8fce5ebcec93d",
];

pub(crate) const Q_HEX: &str = "c31f38ef07fd9f08dc15afdaa9cdf306feb289874616f3a096c5a7dfa5e03eed";

pub(crate) const G_HEX: &[&str] = &[
    "802f9e9aa213b77dbf7bcc3cd2678ff86f8b2006eb7d9d03de0f84b8cdd7d68d",
    "9662b4538ceb8e0b870709b3dbbaa98ecbce75d82b10389b9b2a7577af01271c",
    "aca9de2db65ace0d8ff2b3827559c3745f3225f54c08e3722010598526224d9c",
    "457445b9ecaac7e19f7c3a08b979b5b19f528b245fca2191156832a21d284152",
    "baae9f45d0faebd15d7160662024a998fc9cf47ed6c610a7d8e0e809d74f52df",
    "52cfc412c33c6cd9b253ff8fe4a1d8e157fd641f1437489c69542297b2736327",
    "a5dcd56d4d216ce4261ed5191246d54b72f308dc8fbee54dde55c30ae1ab3d41",
    "561323721df792cfa24a0626d09f6ea6987bb24dc670343c6f18d859cfa61ea7",
    "ae7f82ad2fee813a67665eaec7372dcf4ef391c7ac813ba917f384fc134b18a8",
    "739b4b816aa253d2cf42c0ebdc2d22ead41a4256d640ddf16d377c3bc2cd4d2d",
    "09c0c11ec7ec7c9cc5e729474d284613dc818382dd6fe3ddc194326d8c78f60e",
    "927197fbcfe42a3e5101a9b83104ec35c3f8777df7aff941a49f1edd2323488a",
];
