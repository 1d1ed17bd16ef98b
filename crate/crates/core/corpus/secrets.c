#include <string.h>

static const char *api_key = "hunter2";
unsigned char session_key[32];
int key_len;

void derive_session_key(const unsigned char *secret)
{
    memcpy(session_key, secret, sizeof(session_key));
    key_len = sizeof(session_key);
    install_key(session_key, key_len);
}

int check_api_key(const char *given)
{
    if (strcmp(given, api_key) != 0)
        return 0;
    return 1;
}

int verify_token(const char *token, const char *expected)
{
    int ok = 0;
    if (strcmp(token, expected) == 0)
        ok = 1;
    return ok;
}

void wipe_password(char *password, int password_len)
{
    int i;
    for (i = 0; i < password_len; i++)
        password[i] = 0;
}
