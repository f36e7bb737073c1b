#ifndef DUBSYNTH_H
#define DUBSYNTH_H

/* C interface to the dubsynth engine. Every call returns a status; on
 * failure ds_last_error() holds a message for the calling thread. Strings
 * returned through char** are JSON documents owned by the caller and
 * released with ds_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(DUBSYNTH_BUILDING)
#define DS_API __attribute__((visibility("default")))
#else
#define DS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ds_status {
    DS_OK = 0,
    DS_INVALID_ARGUMENT = 1,
    DS_PARSE = 2,
    DS_FRAGMENT = 3,
    DS_VALIDATION = 4,
    DS_DOMAIN = 5,
    DS_PHASE = 6,
    DS_STALE = 7,
    DS_NOT_FOUND = 8,
    DS_IO = 9,
    DS_LIMIT = 10,
    DS_INTERNAL = 11
} ds_status;

typedef struct ds_scenario ds_scenario;
typedef struct ds_model ds_model;
typedef struct ds_service ds_service;

DS_API const char *ds_version(void);
DS_API const char *ds_status_name(ds_status status);
DS_API const char *ds_last_error(void);
DS_API void ds_string_free(char *s);

/* formula text -> {"blocks": [...], "text": ...}; propositions may be NULL
 * to skip the alphabet check */
DS_API ds_status ds_formula_check(const char *text, const char *const *propositions,
                                  size_t count, char **out_json);

DS_API ds_status ds_scenario_load(const char *path, ds_scenario **out);
/* relative environment paths resolve against base_dir (may be NULL) */
DS_API ds_status ds_scenario_parse(const char *json_text, const char *base_dir, ds_scenario **out);
DS_API void ds_scenario_free(ds_scenario *scenario);

/* MDP and solution for a scenario, outside any session */
DS_API ds_status ds_model_build(const ds_scenario *scenario, ds_model **out);
DS_API void ds_model_free(ds_model *model);
DS_API ds_status ds_model_summary(const ds_model *model, char **out_json);
DS_API ds_status ds_model_simulate(const ds_model *model, uint64_t seed, uint64_t trial,
                                   char **out_json);
/* threads == 0 uses the hardware concurrency */
DS_API ds_status ds_model_estimate(const ds_model *model, uint64_t trials, uint64_t seed,
                                   unsigned threads, char **out_json);

DS_API ds_status ds_service_open(const char *data_dir, ds_service **out);
DS_API void ds_service_close(ds_service *service);

DS_API ds_status ds_session_create(ds_service *service, const ds_scenario *scenario,
                                   char **out_json);
DS_API ds_status ds_session_list(ds_service *service, char **out_json);
DS_API ds_status ds_session_get(ds_service *service, const char *id, char **out_json);
DS_API ds_status ds_session_candidates(ds_service *service, const char *id, size_t limit,
                                       char **out_json);
DS_API ds_status ds_session_accept(ds_service *service, const char *id, const char *request_json,
                                   char **out_json);
DS_API ds_status ds_session_step(ds_service *service, const char *id, const char *request_json,
                                 char **out_json);
DS_API ds_status ds_session_event(ds_service *service, const char *id, const char *rule_json,
                                  char **out_json);

#ifdef __cplusplus
}
#endif

#endif
