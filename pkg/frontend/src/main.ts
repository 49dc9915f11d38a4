/** Browser bootstrap: read connection settings and mount the app.

The only persisted client state is the auth token and base URL in
localStorage; everything else always comes fresh from the service.
*/

import { mountApp } from './app.js';

function setting(key: string, fallback: string): string {
  const fromQuery = new URLSearchParams(window.location.search).get(key);
  if (fromQuery) {
    localStorage.setItem(`reqfusion.${key}`, fromQuery);
    return fromQuery;
  }
  return localStorage.getItem(`reqfusion.${key}`) ?? fallback;
}

const root = document.getElementById('app');
if (root) {
  const app = mountApp(root, {
    baseUrl: setting('base', 'http://127.0.0.1:8400'),
    token: setting('token', ''),
    reviewer: setting('reviewer', 'reviewer'),
  });
  void app.start();
}
