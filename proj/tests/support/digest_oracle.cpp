#include "digest_oracle.hpp"

namespace tracer::testing {

std::vector<DigestOracle> oracle_payloads()
{
    std::string all_bytes;
    for (int i = 0; i < 256; ++i) {
        all_bytes += static_cast<char>(i);
    }
    std::string digits;
    for (int i = 0; i < 10000; ++i) {
        digits += "0123456789";
    }
    return {
        {"", "sha1:3I42H3S6NNFQ2MSVX7XZKYAYSCX5QBYJ",
         "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"},
        {"abc", "sha1:VGMT4NSHA2AWVOR6EVYXQUGCNSONBWE5",
         "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"},
        {"The quick brown fox jumps over the lazy dog", "sha1:F7KODRT2FUUPZ3MET3Q3W5XHHENZH2YS",
         "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592"},
        {std::string(1000, 'a'), "sha1:FEPJU3DGTFEUTNL3UXTFANQ6TD6DNMN2",
         "41edece42d63e8d9bf515a9ba6932e1c20cbc9f5a5d134645adb5db1b9737ea3"},
        {all_bytes, "sha1:JELNNPNX66HGQA3JRSVTFUKYN2SFPX6I",
         "40aff2e9d2d8922e47afd4648e6967497158785fbd1da870e7110266bf944880"},
        {"<html><body>hi</body></html>", "sha1:QNF64SULHC3J2D777JNEW7IBJC7XFIGJ",
         "95d70659530e385bfae5d6eefe689d95ac463cb0c58235f19eef71bdaa725126"},
        {std::string(64, '\0'), "sha1:ZDL5B3YO5X5IFUXKDKSZFBC3TJWUWAVX",
         "f5a5fd42d16a20302798ef6ed309979b43003d2320d9f0e8ea9831a92759fb4b"},
        {digits, "sha1:O2G27M4XJRK3FQXESIUZZSEDH6SYPTDT",
         "aca9e593cc629cbaa94cd5a07dc029424aad93e5129e5d11f8dcd2f139c16cc0"},
        {"\xc3\xbc"
         "n\xc3\xaf"
         "c\xc3\xb8"
         "d\xc3\xa9 \xe2\x9c\x93",
         "sha1:YTRQS2QEWOXQHFPVN7UBGDBQCKHAEIER", "a6745d77670391f486b213eef2a38cf5c7ff62becd7b95217acf1f962a602162"},
        {std::string(1000000, 'a'), "sha1:GSVJOPGUYTNKJ5Q65MV5XLJHGFSTIALP",
         "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0"},
    };
}

} // namespace tracer::testing
