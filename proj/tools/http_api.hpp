#pragma once

// HTTP/JSON front end over the C API.

#include "dubsynth/dubsynth.h"

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace dubsynth_http {

class Api {
public:
    // The service handle is borrowed; relative environment paths in posted
    // scenarios resolve against scenario_root.
    Api(ds_service *service, std::string scenario_root);
    ~Api();

    httplib::Server &server() { return *server_; }

    // Blocks until stop() is called.
    bool listen(const std::string &host, int port);
    int bind_any_port(const std::string &host);
    bool listen_after_bind();
    void stop();

private:
    void routes();

    ds_service *service_;
    std::string root_;
    std::unique_ptr<httplib::Server> server_;
};

int http_status(ds_status s);

}  // namespace dubsynth_http
