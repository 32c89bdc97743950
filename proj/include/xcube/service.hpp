#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "xcube/engine.hpp"

namespace xcube {

struct ServiceOptions {
    std::chrono::seconds session_ttl{3600};
};

/// HTTP front end. Each session is guarded by its own mutex, so requests on one session are
/// serialized while different sessions proceed in parallel over the shared workspace.
class Service {
public:
    explicit Service(Workspace& ws, ServiceOptions opt = {}) : ws_(ws), opt_(opt) { routes(); }

    httplib::Server& server() { return server_; }

    bool listen(const std::string& host, int port) { return server_.listen(host, port); }
    int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    void stop() { server_.stop(); }

    std::size_t session_count() {
        std::lock_guard lock(mu_);
        return sessions_.size();
    }

private:
    using Json = nlohmann::json;

    struct Entry {
        std::mutex mu;
        std::unique_ptr<Session> session;
        std::chrono::steady_clock::time_point touched;
    };

    static void reply(httplib::Response& res, int status, const Json& body) {
        res.status = status;
        res.set_content(body.dump(2), "application/json");
    }

    /// Runs `f` translating engine errors to HTTP statuses.
    template <class F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const StateError& e) {
            reply(res, 409, {{"error", "state"}, {"message", e.what()}});
        } catch (const NotFoundError& e) {
            reply(res, 404, {{"error", "not_found"}, {"message", e.what()}});
        } catch (const InvalidQueryError& e) {
            reply(res, 400, {{"error", "invalid_query"}, {"message", e.what()}, {"position", e.position()}});
        } catch (const KeyViolationError& e) {
            reply(res, 422, {{"error", "key_violation"}, {"message", e.what()}, {"nodes", {e.first(), e.second()}}});
        } catch (const PlanningError& e) {
            reply(res, 422, {{"error", "planning"}, {"message", e.what()}});
        } catch (const InvalidSelectionError& e) {
            reply(res, 400, {{"error", "invalid_selection"}, {"message", e.what()}});
        } catch (const InvalidArgumentError& e) {
            reply(res, 400, {{"error", "invalid_argument"}, {"message", e.what()}});
        } catch (const Json::exception& e) {
            reply(res, 400, {{"error", "bad_request"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", "internal"}, {"message", e.what()}});
        }
    }

    static Json body_of(const httplib::Request& req) {
        if (req.body.empty()) return Json::object();
        return Json::parse(req.body);
    }

    /// Per-request overrides of k, radius_cap and allow_duplicates.
    Config overrides(const Json& j, Config base) const {
        if (j.contains("k")) base.k = j["k"].get<std::size_t>();
        if (j.contains("radius_cap")) base.radius_cap = j["radius_cap"].get<std::uint32_t>();
        if (j.contains("allow_duplicates")) base.allow_duplicates = j["allow_duplicates"].get<bool>();
        base.validate();
        return base;
    }

    std::shared_ptr<Entry> find(const std::string& id) {
        std::lock_guard lock(mu_);
        expire();
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("no session " + id);
        it->second->touched = std::chrono::steady_clock::now();
        return it->second;
    }

    void expire() {
        auto now = std::chrono::steady_clock::now();
        for (auto it = sessions_.begin(); it != sessions_.end();)
            if (now - it->second->touched > opt_.session_ttl) it = sessions_.erase(it);
            else ++it;
    }

    std::string new_id() {
        std::uniform_int_distribution<std::uint64_t> d;
        return text::hex64(d(rng_));
    }

    /// Locks the session named in the path and runs `f(session, body)`.
    template <class F>
    void with_session(const httplib::Request& req, httplib::Response& res, F&& f) {
        guarded(res, [&] {
            auto e = find(req.matches[1]);
            std::lock_guard lock(e->mu);
            f(*e->session, body_of(req));
        });
    }

    static std::map<std::size_t, std::set<ContextPath>> parse_selections(const Json& j, std::size_t terms) {
        std::map<std::size_t, std::set<ContextPath>> out;
        if (!j.contains("selections")) return out;
        for (auto& [key, paths] : j["selections"].items()) {
            std::size_t term = std::stoul(key);
            if (term < 1 || term > terms)
                throw InvalidSelectionError("term " + key + " does not exist; the query has " + std::to_string(terms) +
                                            " terms");
            for (auto& p : paths) out[term - 1].insert(ContextPath::parse(p.get<std::string>()));
        }
        return out;
    }

    void routes() {
        server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto j = body_of(req);
                auto e = std::make_shared<Entry>();
                e->session = std::make_unique<Session>(ws_, j.at("query").get<std::string>(), overrides(j, ws_.config()));
                e->touched = std::chrono::steady_clock::now();
                auto& s = *e->session;
                Json out{{"id", ""},
                         {"query", s.query().to_string()},
                         {"topk", topk_to_json(ws_.store(), s.top())},
                         {"contexts", buckets_to_json(s.contexts())}};
                std::lock_guard lock(mu_);
                expire();
                auto id = new_id();
                out["id"] = id;
                sessions_[id] = std::move(e);
                reply(res, 201, out);
            });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/contexts)", [this](const httplib::Request& req, httplib::Response& res) {
            with_session(req, res, [&](Session& s, const Json& j) {
                if (j.contains("k") || j.contains("radius_cap") || j.contains("allow_duplicates"))
                    s.set_config(overrides(j, s.config()));
                s.select_contexts(parse_selections(j, s.query().size()));
                reply(res, 200,
                      {{"query", s.query().to_string()},
                       {"topk", topk_to_json(ws_.store(), s.top())},
                       {"connections", summary_to_json(s.connections())}});
            });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/connections)", [this](const httplib::Request& req, httplib::Response& res) {
            with_session(req, res, [&](Session& s, const Json& j) {
                std::set<std::string> ids;
                for (auto& id : j.at("chosen")) ids.insert(id.get<std::string>());
                s.select_connections(ids);
                reply(res, 200, {{"ok", true}, {"chosen", ids}});
            });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/materialize)", [this](const httplib::Request& req, httplib::Response& res) {
            with_session(req, res, [&](Session& s, const Json&) {
                const auto& r = s.materialize();
                reply(res, 200,
                      {{"rows", r.rows.size()},
                       {"terms", r.terms},
                       {"warnings", r.warnings},
                       {"result", "/sessions/" + std::string(req.matches[1]) + "/result.csv"}});
            });
        });

        server_.Get(R"(/sessions/([0-9a-f]+)/result\.csv)", [this](const httplib::Request& req, httplib::Response& res) {
            with_session(req, res, [&](Session& s, const Json&) {
                res.status = 200;
                res.set_content(s.result().to_csv(ws_.store()), "text/csv");
            });
        });

        server_.Get(R"(/sessions/([0-9a-f]+)/match)", [this](const httplib::Request& req, httplib::Response& res) {
            with_session(req, res, [&](Session& s, const Json&) { reply(res, 200, match_to_json(s.match())); });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/catalog)", [this](const httplib::Request& req, httplib::Response& res) {
            with_session(req, res, [&](Session& s, const Json& j) {
                for (auto& d : j.at("definitions")) {
                    std::set<ContextPath> ctx;
                    for (auto& p : d.at("contexts")) ctx.insert(ContextPath::parse(p.get<std::string>()));
                    s.define(entry_kind_from_string(d.at("kind").get<std::string>()), d.at("name").get<std::string>(),
                             d.at("term").get<std::size_t>(), ctx, d.at("key").get<std::vector<std::string>>());
                }
                reply(res, 200, match_to_json(s.match()));
            });
        });

        server_.Post(R"(/sessions/([0-9a-f]+)/cube)", [this](const httplib::Request& req, httplib::Response& res) {
            with_session(req, res, [&](Session& s, const Json& j) {
                CubeSelection sel;
                auto report = s.match();
                // defaults: every fully matched fact and dimension
                sel.facts = j.contains("facts") ? j["facts"].get<std::set<std::string>>() : report.entries(EntryKind::fact);
                sel.dimensions = j.contains("dimensions") ? j["dimensions"].get<std::set<std::string>>()
                                                          : report.entries(EntryKind::dimension);
                s.build_cube(sel, {j.value("skip_rows", false)});
                Json out = s.star().manifest;
                Json links = Json::object();
                for (auto* v : {&s.star().facts, &s.star().dimensions})
                    for (auto& t : *v) links[t.name] = "/sessions/" + std::string(req.matches[1]) + "/tables/" + t.name + ".csv";
                out["downloads"] = links;
                reply(res, 200, out);
            });
        });

        server_.Get(R"(/sessions/([0-9a-f]+)/tables/([A-Za-z0-9_]+)\.csv)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        with_session(req, res, [&](Session& s, const Json&) {
                            auto t = s.star().table(req.matches[2]);
                            if (!t) throw NotFoundError("no table " + std::string(req.matches[2]));
                            res.status = 200;
                            res.set_content(t->to_csv(), "text/csv");
                        });
                    });

        server_.Get("/catalog", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] { reply(res, 200, ws_.catalog().to_json()); });
        });

        server_.Get("/guides/stats", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                auto s = ws_.guides().stats();
                reply(res, 200,
                      {{"threshold", s.threshold},
                       {"guides", s.guides},
                       {"documents", s.documents},
                       {"distinct_paths", s.distinct_paths},
                       {"min_paths", s.min_paths},
                       {"avg_paths", s.avg_paths},
                       {"max_paths", s.max_paths},
                       {"links", s.links},
                       {"report", ws_.guides().report()}});
            });
        });
    }

    Workspace& ws_;
    ServiceOptions opt_;
    httplib::Server server_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace xcube
