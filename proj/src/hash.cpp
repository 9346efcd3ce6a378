#include "driftcast/hash.hpp"

#include "driftcast/error.hpp"

#include <openssl/evp.h>

#include <cstdio>

namespace driftcast {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
	if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
		throw Error(Errc::Io, "cannot initialise SHA-256");
	}
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Sha256& Sha256::update(std::string_view bytes) {
	EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size());
	return *this;
}

Sha256& Sha256::update(std::span<const double> values) {
	EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), values.data(), values.size_bytes());
	return *this;
}

std::string Sha256::hex() {
	unsigned char digest[EVP_MAX_MD_SIZE];
	unsigned int len = 0;
	EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), digest, &len);
	std::string out;
	char buf[3];
	for (unsigned int i = 0; i < len; ++i) {
		std::snprintf(buf, sizeof buf, "%02x", digest[i]);
		out += buf;
	}
	return out;
}

std::string sha256_hex(std::string_view bytes) { return Sha256().update(bytes).hex(); }

} // namespace driftcast
