#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>

#include "memattest/error.hpp"
#include "memattest/wire.hpp"

namespace memattest {

namespace {

// ---------------------------------------------------------------- loopback

struct LoopbackChannel {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<Bytes> queue;
    bool closed = false;
};

class LoopbackSession final : public Session {
public:
    LoopbackSession(std::shared_ptr<LoopbackChannel> in, std::shared_ptr<LoopbackChannel> out)
        : in_(std::move(in)), out_(std::move(out)) {}

    ~LoopbackSession() override { close(); }

    void send(const WireMessage& msg) override {
        Bytes frame = encode(msg);
        std::lock_guard lock(out_->mutex);
        if (out_->closed) {
            throw Error(ErrorCode::ConnectionFailure, "send on closed session");
        }
        out_->queue.push_back(std::move(frame));
        out_->cv.notify_all();
    }

    WireMessage receive() override {
        std::unique_lock lock(in_->mutex);
        in_->cv.wait(lock, [&] { return !in_->queue.empty() || in_->closed; });
        return pop_locked();
    }

    std::optional<WireMessage> receive_for(std::chrono::milliseconds timeout) override {
        std::unique_lock lock(in_->mutex);
        if (!in_->cv.wait_for(lock, timeout,
                              [&] { return !in_->queue.empty() || in_->closed; })) {
            return std::nullopt;
        }
        return pop_locked();
    }

    void close() override {
        for (auto* ch : {in_.get(), out_.get()}) {
            std::lock_guard lock(ch->mutex);
            ch->closed = true;
            ch->cv.notify_all();
        }
    }

private:
    WireMessage pop_locked() {
        if (in_->queue.empty()) {
            throw Error(ErrorCode::ConnectionFailure, "peer closed the session");
        }
        Bytes frame = std::move(in_->queue.front());
        in_->queue.pop_front();
        auto len = frame_payload_length(frame);
        if (!len || frame.size() != *len + 4) {
            throw Error(ErrorCode::MalformedJson, "inconsistent loopback frame");
        }
        return decode(Bytes(frame.begin() + 4, frame.end()));
    }

    std::shared_ptr<LoopbackChannel> in_;
    std::shared_ptr<LoopbackChannel> out_;
};

// --------------------------------------------------------------- tcp / tls

class ByteStream {
public:
    virtual ~ByteStream() = default;
    // Reads exactly n bytes; false on timeout before the first byte,
    // throws on close/error or mid-frame timeout.
    virtual bool read_exact(uint8_t* buf, size_t n, int timeout_ms) = 0;
    virtual void write_all(const uint8_t* buf, size_t n) = 0;
    virtual void close() = 0;
};

class FdGuard {
public:
    explicit FdGuard(int fd = -1) : fd_(fd) {}
    ~FdGuard() { reset(); }
    FdGuard(FdGuard&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    FdGuard& operator=(FdGuard&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = other.fd_;
            other.fd_ = -1;
        }
        return *this;
    }
    int get() const { return fd_; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_;
};

bool wait_readable(int fd, int timeout_ms) {
    pollfd p{fd, POLLIN, 0};
    int rc = ::poll(&p, 1, timeout_ms);
    if (rc < 0) {
        throw Error(ErrorCode::ConnectionFailure, std::string("poll: ") + std::strerror(errno));
    }
    return rc > 0;
}

class TcpStream final : public ByteStream {
public:
    explicit TcpStream(FdGuard fd) : fd_(std::move(fd)) {}

    bool read_exact(uint8_t* buf, size_t n, int timeout_ms) override {
        size_t got = 0;
        while (got < n) {
            if (fd_.get() < 0) {
                throw Error(ErrorCode::ConnectionFailure, "read on closed session");
            }
            if (timeout_ms >= 0 && !wait_readable(fd_.get(), timeout_ms)) {
                if (got == 0) return false;
                throw Error(ErrorCode::ConnectionFailure, "timeout mid-frame");
            }
            ssize_t rc = ::recv(fd_.get(), buf + got, n - got, 0);
            if (rc == 0) {
                throw Error(ErrorCode::ConnectionFailure, "peer closed the connection");
            }
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorCode::ConnectionFailure,
                            std::string("recv: ") + std::strerror(errno));
            }
            got += size_t(rc);
        }
        return true;
    }

    void write_all(const uint8_t* buf, size_t n) override {
        size_t sent = 0;
        while (sent < n) {
            if (fd_.get() < 0) {
                throw Error(ErrorCode::ConnectionFailure, "send on closed session");
            }
            ssize_t rc = ::send(fd_.get(), buf + sent, n - sent, MSG_NOSIGNAL);
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorCode::ConnectionFailure,
                            std::string("send: ") + std::strerror(errno));
            }
            sent += size_t(rc);
        }
    }

    void close() override { fd_.reset(); }

private:
    FdGuard fd_;
};

using SslHandle = std::unique_ptr<SSL, decltype(&SSL_free)>;
using SslCtxHandle = std::unique_ptr<SSL_CTX, decltype(&SSL_CTX_free)>;

class TlsStream final : public ByteStream {
public:
    TlsStream(FdGuard fd, SslHandle ssl) : fd_(std::move(fd)), ssl_(std::move(ssl)) {}

    bool read_exact(uint8_t* buf, size_t n, int timeout_ms) override {
        size_t got = 0;
        while (got < n) {
            if (!ssl_) {
                throw Error(ErrorCode::ConnectionFailure, "read on closed session");
            }
            if (timeout_ms >= 0 && SSL_pending(ssl_.get()) == 0 &&
                !wait_readable(fd_.get(), timeout_ms)) {
                if (got == 0) return false;
                throw Error(ErrorCode::ConnectionFailure, "timeout mid-frame");
            }
            size_t rd = 0;
            if (SSL_read_ex(ssl_.get(), buf + got, n - got, &rd) != 1) {
                ERR_clear_error();
                throw Error(ErrorCode::ConnectionFailure, "TLS read failed");
            }
            got += rd;
        }
        return true;
    }

    void write_all(const uint8_t* buf, size_t n) override {
        if (!ssl_) {
            throw Error(ErrorCode::ConnectionFailure, "send on closed session");
        }
        size_t written = 0;
        if (n > 0 && SSL_write_ex(ssl_.get(), buf, n, &written) != 1) {
            ERR_clear_error();
            throw Error(ErrorCode::ConnectionFailure, "TLS write failed");
        }
    }

    void close() override {
        if (ssl_) {
            SSL_shutdown(ssl_.get());
            ssl_.reset();
        }
        fd_.reset();
    }

private:
    FdGuard fd_;
    SslHandle ssl_{nullptr, SSL_free};
};

class StreamSession final : public Session {
public:
    explicit StreamSession(std::unique_ptr<ByteStream> stream) : stream_(std::move(stream)) {}
    ~StreamSession() override { close(); }

    void send(const WireMessage& msg) override {
        Bytes frame = encode(msg);
        stream_->write_all(frame.data(), frame.size());
    }

    WireMessage receive() override { return *receive_impl(-1); }

    std::optional<WireMessage> receive_for(std::chrono::milliseconds timeout) override {
        return receive_impl(int(timeout.count()));
    }

    void close() override { stream_->close(); }

private:
    std::optional<WireMessage> receive_impl(int timeout_ms) {
        uint8_t prefix[4];
        if (!stream_->read_exact(prefix, 4, timeout_ms)) return std::nullopt;
        Bytes head(prefix, prefix + 4);
        size_t n = *frame_payload_length(head);
        Bytes payload(n);
        if (n > 0 && !stream_->read_exact(payload.data(), n, timeout_ms)) return std::nullopt;
        return decode(payload);
    }

    std::unique_ptr<ByteStream> stream_;
};

// Ephemeral P-256 key and self-signed certificate for the TLS listener. The
// channel provides confidentiality only; endpoint identity comes from the
// TPM key registry, so peers do not do PKI validation here.
struct TlsServerIdentity {
    PkeyHandle key{nullptr};
    std::unique_ptr<X509, decltype(&X509_free)> cert{nullptr, X509_free};
};

TlsServerIdentity make_tls_identity() {
    TlsServerIdentity id;
    id.key.reset(EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", "P-256"));
    if (!id.key) throw Error(ErrorCode::CryptoFailure, "TLS key generation failed");
    id.cert.reset(X509_new());
    X509_set_version(id.cert.get(), 2);
    ASN1_INTEGER_set(X509_get_serialNumber(id.cert.get()), 1);
    X509_gmtime_adj(X509_getm_notBefore(id.cert.get()), 0);
    X509_gmtime_adj(X509_getm_notAfter(id.cert.get()), 60L * 60 * 24 * 365);
    X509_set_pubkey(id.cert.get(), id.key.get());
    X509_NAME* name = X509_get_subject_name(id.cert.get());
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>("memattest"), -1, -1, 0);
    X509_set_issuer_name(id.cert.get(), name);
    if (X509_sign(id.cert.get(), id.key.get(), EVP_sha256()) == 0) {
        throw Error(ErrorCode::CryptoFailure, "TLS certificate signing failed");
    }
    return id;
}

class TcpListener final : public Listener {
public:
    TcpListener(const std::string& host, uint16_t port, TransportOptions options)
        : options_(options) {
        fd_ = FdGuard(::socket(AF_INET, SOCK_STREAM, 0));
        if (fd_.get() < 0) {
            throw Error(ErrorCode::ConnectionFailure, "socket() failed");
        }
        int one = 1;
        ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            throw Error(ErrorCode::ConnectionFailure, "bad listen address " + host);
        }
        if (::bind(fd_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            throw Error(ErrorCode::ConnectionFailure,
                        "bind " + host + ":" + std::to_string(port) + ": " +
                            std::strerror(errno));
        }
        if (::listen(fd_.get(), 16) != 0) {
            throw Error(ErrorCode::ConnectionFailure, std::string("listen: ") +
                                                          std::strerror(errno));
        }
        sockaddr_in bound{};
        socklen_t len = sizeof(bound);
        ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&bound), &len);
        port_ = ntohs(bound.sin_port);

        if (options_.tls) {
            identity_ = make_tls_identity();
            ctx_ = SslCtxHandle(SSL_CTX_new(TLS_server_method()), SSL_CTX_free);
            if (!ctx_ || SSL_CTX_use_certificate(ctx_.get(), identity_.cert.get()) != 1 ||
                SSL_CTX_use_PrivateKey(ctx_.get(), identity_.key.get()) != 1) {
                throw Error(ErrorCode::HandshakeFailure, "TLS server context setup failed");
            }
        }
    }

    std::unique_ptr<Session> accept() override { return accept_impl(-1); }

    std::unique_ptr<Session> accept_for(std::chrono::milliseconds timeout) override {
        return accept_impl(int(timeout.count()));
    }

    uint16_t port() const override { return port_; }

    void close() override { fd_.reset(); }

private:
    std::unique_ptr<Session> accept_impl(int timeout_ms) {
        if (fd_.get() < 0) {
            throw Error(ErrorCode::ConnectionFailure, "accept on closed listener");
        }
        if (timeout_ms >= 0 && !wait_readable(fd_.get(), timeout_ms)) return nullptr;
        FdGuard conn(::accept(fd_.get(), nullptr, nullptr));
        if (conn.get() < 0) {
            throw Error(ErrorCode::ConnectionFailure, std::string("accept: ") +
                                                          std::strerror(errno));
        }
        if (!options_.tls) {
            return std::make_unique<StreamSession>(std::make_unique<TcpStream>(std::move(conn)));
        }
        SslHandle ssl(SSL_new(ctx_.get()), SSL_free);
        if (!ssl || SSL_set_fd(ssl.get(), conn.get()) != 1 || SSL_accept(ssl.get()) != 1) {
            ERR_clear_error();
            throw Error(ErrorCode::HandshakeFailure, "TLS accept failed");
        }
        return std::make_unique<StreamSession>(
            std::make_unique<TlsStream>(std::move(conn), std::move(ssl)));
    }

    TransportOptions options_;
    FdGuard fd_;
    uint16_t port_ = 0;
    TlsServerIdentity identity_;
    SslCtxHandle ctx_{nullptr, SSL_CTX_free};
};

} // namespace

std::pair<std::unique_ptr<Session>, std::unique_ptr<Session>> make_loopback_pair() {
    auto a_to_b = std::make_shared<LoopbackChannel>();
    auto b_to_a = std::make_shared<LoopbackChannel>();
    return {std::make_unique<LoopbackSession>(b_to_a, a_to_b),
            std::make_unique<LoopbackSession>(a_to_b, b_to_a)};
}

std::unique_ptr<Listener> listen_tcp(const std::string& host, uint16_t port,
                                     TransportOptions options) {
    return std::make_unique<TcpListener>(host, port, options);
}

std::unique_ptr<Session> connect_tcp(const std::string& host, uint16_t port,
                                     TransportOptions options) {
    FdGuard fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (fd.get() < 0) {
        throw Error(ErrorCode::ConnectionFailure, "socket() failed");
    }
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        throw Error(ErrorCode::ConnectionFailure, "bad address " + host);
    }
    if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw Error(ErrorCode::ConnectionFailure,
                    "connect " + host + ":" + std::to_string(port) + ": " +
                        std::strerror(errno));
    }
    if (!options.tls) {
        return std::make_unique<StreamSession>(std::make_unique<TcpStream>(std::move(fd)));
    }
    SslCtxHandle ctx(SSL_CTX_new(TLS_client_method()), SSL_CTX_free);
    if (!ctx) throw Error(ErrorCode::HandshakeFailure, "TLS client context setup failed");
    SSL_CTX_set_verify(ctx.get(), SSL_VERIFY_NONE, nullptr);
    SslHandle ssl(SSL_new(ctx.get()), SSL_free);
    if (!ssl || SSL_set_fd(ssl.get(), fd.get()) != 1 || SSL_connect(ssl.get()) != 1) {
        ERR_clear_error();
        throw Error(ErrorCode::HandshakeFailure, "TLS connect failed");
    }
    return std::make_unique<StreamSession>(
        std::make_unique<TlsStream>(std::move(fd), std::move(ssl)));
}

} // namespace memattest
