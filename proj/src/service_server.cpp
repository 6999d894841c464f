#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <deque>
#include <fstream>
#include <set>

#include "srd/service.hpp"

namespace srd::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

// State frames queued beyond this are dropped for a lagging client.
constexpr std::size_t kMaxQueuedStates = 2;

}  // namespace

class Connection;

struct Server::Impl {
    Impl(Session& s, const ServeOptions& o)
        : session(s), opt(o), acceptor(ioc), sim_timer(ioc), state_timer(ioc), signals(ioc) {}

    void accept();
    void schedule_sim();
    void schedule_state();
    void remove(const std::shared_ptr<Connection>& c);
    void shutdown();

    Session& session;
    ServeOptions opt;
    net::io_context ioc;
    tcp::acceptor acceptor;
    net::steady_timer sim_timer;
    net::steady_timer state_timer;
    net::signal_set signals;
    Clock::time_point next_sim;
    Clock::time_point next_state;
    std::set<std::shared_ptr<Connection>> conns;
    bool stopping = false;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Server::Impl& srv) : ws_(std::move(socket)), srv_(srv) {}

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
    }

    void send(std::string_view kind, Json payload, bool droppable = false) {
        if (closed_) return;
        if (droppable && queue_.size() >= kMaxQueuedStates) return;
        queue_.push_back(envelope(kind, seq_++, srv_.session.simulator().time(), std::move(payload)).dump());
        if (queue_.size() == 1) write_next();
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) {
            spdlog::debug("websocket handshake failed: {}", ec.message());
            return;
        }
        srv_.conns.insert(shared_from_this());
        spdlog::info("client connected ({} open)", srv_.conns.size());
        send("hello", srv_.session.hello_payload());
        read_next();
    }

    void read_next() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            closed_ = true;
            srv_.remove(shared_from_this());
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        try {
            srv_.session.submit(parse_inbound(text));
        } catch (const ProtocolError& e) {
            spdlog::debug("rejected message: {}", e.what());
            send("error", error_payload(e.what(), e.seq()));
        }
        read_next();
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
    }

    void on_write(beast::error_code ec) {
        queue_.pop_front();
        if (ec) {
            closed_ = true;
            queue_.clear();
            return;
        }
        if (!queue_.empty()) write_next();
    }

    websocket::stream<beast::tcp_stream> ws_;
    Server::Impl& srv_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    std::int64_t seq_ = 0;
    bool closed_ = false;
};

void Server::Impl::accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (stopping) return;
        if (!ec) std::make_shared<Connection>(std::move(socket), *this)->start();
        accept();
    });
}

void Server::Impl::schedule_sim() {
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(session.controller_period() / opt.speed));
    next_sim += period;
    // After a stall, resume pacing from now instead of catching up in a burst.
    if (next_sim + 5 * period < Clock::now()) next_sim = Clock::now() + period;
    sim_timer.expires_at(next_sim);
    sim_timer.async_wait([this](beast::error_code ec) {
        if (ec || stopping) return;
        session.tick();
        schedule_sim();
    });
}

void Server::Impl::schedule_state() {
    next_state += std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / opt.state_rate_hz));
    state_timer.expires_at(next_state);
    state_timer.async_wait([this](beast::error_code ec) {
        if (ec || stopping) return;
        if (!conns.empty()) {
            const Json state = session.state_payload();
            for (const auto& c : conns) c->send("state", state, true);
        }
        schedule_state();
    });
}

void Server::Impl::remove(const std::shared_ptr<Connection>& c) {
    if (conns.erase(c) == 0) return;
    spdlog::info("client disconnected ({} open)", conns.size());
    if (conns.empty()) session.clear_override();
}

void Server::Impl::shutdown() {
    if (stopping) return;
    stopping = true;
    beast::error_code ec;
    acceptor.close(ec);
    sim_timer.cancel();
    state_timer.cancel();
    signals.cancel();
    for (const auto& c : conns) c->close();
    conns.clear();
}

Server::Server(Session& session, const ServeOptions& options) : impl_(std::make_unique<Impl>(session, options)) {
    if (!(options.state_rate_hz > 0.0)) throw std::invalid_argument("state rate must be > 0");
    if (!(options.speed > 0.0)) throw std::invalid_argument("speed must be > 0");
    try {
        const tcp::endpoint ep(net::ip::make_address(options.address), options.port);
        impl_->acceptor.open(ep.protocol());
        impl_->acceptor.set_option(net::socket_base::reuse_address(true));
        impl_->acceptor.bind(ep);
        impl_->acceptor.listen();
    } catch (const boost::system::system_error& e) {
        throw BindError("cannot listen on " + options.address + ":" + std::to_string(options.port) + ": " +
                        e.code().message());
    }
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run(bool handle_signals) {
    Impl& s = *impl_;
    if (handle_signals) {
        s.signals.add(SIGINT);
        s.signals.add(SIGTERM);
        s.signals.async_wait([&s](beast::error_code ec, int) {
            if (!ec) s.shutdown();
        });
    }
    s.accept();
    s.next_sim = s.next_state = Clock::now();
    s.schedule_sim();
    s.schedule_state();
    s.ioc.run();

    if (!s.opt.record_path.empty()) {
        std::ofstream out(s.opt.record_path);
        out << "# srd run --scenario " << s.opt.record_path << " --seed " << s.session.seed() << "\n"
            << dump_scenario(s.session.replay_scenario());
        spdlog::info("wrote replay scenario to {}", s.opt.record_path);
    }
}

void Server::stop() {
    net::post(impl_->ioc, [this] { impl_->shutdown(); });
}

}  // namespace srd::service
